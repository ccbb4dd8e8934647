"""Modulo-2pi phase arithmetic.

Every function accepts Python floats or numpy arrays and works element-wise.
Scalars in give floats out, arrays in give arrays out.
"""

import numpy as np

from .errors import DegenerateAverageError, InvalidArgumentError

TWO_PI = 2.0 * np.pi

#: Averages weaker than this (relative to unit-power pilots) have no usable phase.
MAGNITUDE_FLOOR = 1e-9


def _out(value, like):
    if np.ndim(like) == 0 and np.ndim(value) == 0:
        return float(value)
    return value


def wrap(angle):
    """Reduce ``angle`` (radians) into the half-open interval [0, 2pi).

    Exact multiples of 2pi map to 0.

    Raises
    ------
    InvalidArgumentError
        If any element is NaN or infinite.
    """
    a = np.asarray(angle, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("wrap() needs finite angles")
    r = a - TWO_PI * np.floor(a / TWO_PI)
    # floating rounding can land exactly on 2pi (or a hair below 0)
    r = np.where(r >= TWO_PI, r - TWO_PI, r)
    r = np.where(r < 0.0, r + TWO_PI, r)
    r = np.where(r >= TWO_PI, 0.0, r)
    return _out(r, angle)


def add(a, b):
    """Modulo-2pi sum of two phases."""
    return wrap(np.add(a, b))


def sub(a, b):
    """Modulo-2pi difference ``a - b``."""
    return wrap(np.subtract(a, b))


def signed(a):
    """Map a phase to the symmetric interval [-pi, pi)."""
    return _out(wrap(np.add(a, np.pi)) - np.pi, a)


def circular_distance(a, b):
    """Shortest arc length between two phases, in [0, pi]."""
    d = np.abs(wrap(np.subtract(a, b)))
    return _out(np.minimum(d, TWO_PI - d), d)


def complex_mean_phase(samples, axis=-1, floor=MAGNITUDE_FLOOR):
    """Phase of the arithmetic mean of complex samples.

    For a 1-D input this returns one float and raises
    :class:`DegenerateAverageError` when ``|mean| <= floor``.  For N-D
    input the mean is taken along ``axis`` and degenerate entries raise as
    well; use :func:`complex_mean_phase_masked` to get NaN erasures instead.
    """
    z = np.asarray(samples, dtype=np.complex128)
    if z.size == 0 or z.shape[axis] == 0:
        raise InvalidArgumentError("complex_mean_phase() needs at least one sample")
    phases, erased = complex_mean_phase_masked(z, axis=axis, floor=floor)
    if np.any(erased):
        raise DegenerateAverageError("mean of samples is below the magnitude floor")
    if np.ndim(phases) == 0:
        return float(phases)
    return phases


def complex_mean_phase_masked(samples, axis=-1, floor=MAGNITUDE_FLOOR):
    """Batch form of :func:`complex_mean_phase`.

    Returns ``(phases, erased)``; erased entries carry NaN phases.
    """
    z = np.asarray(samples, dtype=np.complex128)
    mean = z.mean(axis=axis)
    erased = np.abs(mean) <= floor
    phases = np.angle(mean)
    phases = np.where(erased, 0.0, phases)
    phases = wrap(phases)
    return np.where(erased, np.nan, phases), erased
