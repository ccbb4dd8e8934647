"""Exception hierarchy shared by all phasekey modules."""


class PhaseKeyError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(PhaseKeyError, ValueError):
    pass


class DegenerateAverageError(PhaseKeyError, ArithmeticError):
    """Averaged pilot magnitude is too small for its phase to mean anything.

    Callers treat the measurement as an erasure.
    """


class CapacityError(PhaseKeyError, ValueError):
    pass


class InvalidLinkError(PhaseKeyError, KeyError):
    pass


class StateReuseError(PhaseKeyError, ValueError):
    """A mirror state was used twice for key material in one session."""


class FramingError(PhaseKeyError, ValueError):
    pass


class InsufficientKeyMaterialError(PhaseKeyError, ValueError):
    pass


class PhaseReuseError(PhaseKeyError, ValueError):
    """A shared phase would mask more than one symbol."""


class InsufficientSampleError(PhaseKeyError, ValueError):
    pass


class InconsistentObservationError(PhaseKeyError, ValueError):
    pass


class ConfigError(PhaseKeyError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
