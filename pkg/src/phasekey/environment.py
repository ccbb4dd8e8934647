"""Simulated reciprocal radio environment.

Each mirror state of Alice's RF-mirror enclosure indexes an independent,
uniformly distributed channel phase per over-air link.  Phases are produced
on demand by a keyed counter-based hash of ``(seed, link, state)``, so a
realization with ``2**K`` states costs nothing until it is read and two
realizations built from the same seed agree everywhere.

Endpoints are named ``"a"``, ``"alpha"`` (Alice), ``"b"``, ``"beta"``
(Bob) and ``"e1" .. "en"`` (Eve).
"""

from dataclasses import dataclass, field
import zlib

import numpy as np

from . import phase_math as pm
from .errors import CapacityError, InvalidArgumentError, InvalidLinkError

MAX_MIRRORS = 30
REFERENCE_STATE = 0

OVER_AIR = "over-air"
INTERNAL = "internal-wired"

TRANSMIT = "tx"
RECEIVE = "rx"

ALICE_SIDE = ("a", "alpha")
BOB_SIDE = ("b", "beta")

# hash domain tags
_LINK, _INTERNAL, _CHAIN, _LOS, _NOISE, _SIGNS = 1, 2, 3, 4, 5, 6
# state slot used for links that do not see Alice's mirrors
_STATIC = np.uint64(0xFFFF_FFFF_FFFF)

_MASK64 = np.uint64(0xFFFF_FFFF_FFFF_FFFF)


def _splitmix(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return x ^ (x >> np.uint64(31))


def keyed_uniform_phase(*keys):
    """Deterministic phase in [0, 2pi) for an integer key tuple.

    Keys may be integers or integer arrays; the result broadcasts.
    """
    with np.errstate(over="ignore"):
        h = np.zeros((), dtype=np.uint64)
        for k in keys:
            h = _splitmix(h ^ np.asarray(k).astype(np.uint64))
    u = (h >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return pm.wrap(u * pm.TWO_PI)


def device_of(endpoint):
    if endpoint in ALICE_SIDE:
        return "alice"
    if endpoint in BOB_SIDE:
        return "bob"
    if _eve_index(endpoint) is not None:
        return "eve"
    raise InvalidLinkError(f"unknown endpoint {endpoint!r}")


def _eve_index(endpoint):
    if isinstance(endpoint, str) and endpoint.startswith("e") and endpoint[1:].isdigit():
        k = int(endpoint[1:])
        if k >= 1:
            return k
    return None


def _endpoint_code(endpoint):
    order = {"a": 0, "alpha": 1, "b": 2, "beta": 3}
    if endpoint in order:
        return order[endpoint]
    k = _eve_index(endpoint)
    if k is None:
        raise InvalidLinkError(f"unknown endpoint {endpoint!r}")
    return 3 + k


@dataclass(frozen=True)
class LinkId:
    """Directed link ``tx -> rx``; the channel phase ignores direction."""

    tx: str
    rx: str

    def __post_init__(self):
        if self.tx == self.rx:
            raise InvalidLinkError(f"link {self.tx}->{self.rx} loops onto itself")
        pair = {self.tx, self.rx}
        eves = [e for e in pair if _eve_index(e) is not None]
        if len(eves) == 2:
            raise InvalidLinkError("no link between two Eve antennas")
        for e in pair:
            _endpoint_code(e)
        if pair in ({"a", "alpha"}, {"b", "beta"}):
            return
        if pair <= set(ALICE_SIDE + BOB_SIDE) and pair not in (
            {"a", "b"}, {"alpha", "b"}, {"beta", "a"},
        ):
            raise InvalidLinkError(f"no over-air link {self.tx}<->{self.rx}")

    @property
    def kind(self):
        if {self.tx, self.rx} in ({"a", "alpha"}, {"b", "beta"}):
            return INTERNAL
        return OVER_AIR

    @property
    def key(self):
        """Direction-free identity used for reciprocity."""
        return tuple(sorted((self.tx, self.rx), key=_endpoint_code))

    @property
    def code(self):
        lo, hi = sorted((_endpoint_code(self.tx), _endpoint_code(self.rx)))
        return lo * 4096 + hi

    @property
    def mirror_dependent(self):
        return self.kind == OVER_AIR and bool({self.tx, self.rx} & set(ALICE_SIDE))

    def reversed(self):
        return LinkId(self.rx, self.tx)

    def __str__(self):
        return f"{self.tx}->{self.rx}"


def link(tx, rx):
    return LinkId(tx, rx)


@dataclass(frozen=True)
class PilotSpec:
    """Known +/-1 pilots on ``tone_count`` OFDM tones.

    ``snr_db = inf`` switches noise off exactly.  Noise is circular complex
    Gaussian with per-quadrature variance ``10**(-snr_db/10)``, so the
    per-tone phase error has standard deviation ``10**(-snr_db/20)`` at
    high SNR.
    """

    tone_count: int
    signs: tuple
    snr_db: float = float("inf")

    def __post_init__(self):
        if int(self.tone_count) < 1:
            raise InvalidArgumentError("tone_count must be >= 1")
        signs = tuple(int(s) for s in self.signs)
        if len(signs) != self.tone_count:
            raise InvalidArgumentError("signs must have one entry per tone")
        if any(s not in (1, -1) for s in signs):
            raise InvalidArgumentError("pilot signs must be +1 or -1")
        object.__setattr__(self, "signs", signs)
        if np.isnan(self.snr_db):
            raise InvalidArgumentError("snr_db must not be NaN")

    @classmethod
    def make(cls, tone_count=16, snr_db=float("inf"), seed=0):
        """Pilot with a reproducible pseudo-random sign pattern."""
        u = keyed_uniform_phase(_SIGNS, seed, np.arange(tone_count))
        signs = np.where(np.atleast_1d(u) < np.pi, 1, -1)
        return cls(tone_count, tuple(int(s) for s in signs), snr_db)

    @property
    def noiseless(self):
        return np.isposinf(self.snr_db)

    @property
    def noise_std(self):
        """Per-quadrature noise standard deviation."""
        return 0.0 if self.noiseless else 10.0 ** (-self.snr_db / 20.0)

    @property
    def sign_array(self):
        return np.asarray(self.signs, dtype=np.float64)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the whole radio world.

    Link phases are not stored; :meth:`link_phase` derives them from the
    seed.  ``internal_phase`` and ``chain_phase`` are small explicit tables
    so tests can perturb them with :func:`dataclasses.replace`.
    """

    seed: int
    K: int
    eve_antennas: int
    los_bias: complex = 0j
    internal_phase: dict = field(default_factory=dict)
    chain_phase: dict = field(default_factory=dict)

    @property
    def state_count(self):
        return 1 << self.K

    @property
    def eve_endpoints(self):
        return tuple(f"e{k}" for k in range(1, self.eve_antennas + 1))

    def check_state(self, state):
        s = np.asarray(state)
        if s.size and (not np.issubdtype(s.dtype, np.integer) or s.min() < 0
                       or s.max() >= self.state_count):
            raise InvalidArgumentError(
                f"mirror state outside [0, 2**{self.K})")
        return s.astype(np.int64)

    def check_link(self, lnk):
        for e in (lnk.tx, lnk.rx):
            k = _eve_index(e)
            if k is not None and k > self.eve_antennas:
                raise InvalidLinkError(f"{e} does not exist (n={self.eve_antennas})")
        return lnk

    def link_phase(self, lnk, state):
        """Raw channel phase of ``lnk`` at mirror ``state`` (array-aware)."""
        self.check_link(lnk)
        s = self.check_state(state)
        if lnk.kind == INTERNAL:
            return self._broadcast(self.internal_phase[lnk.key], state)
        if lnk.mirror_dependent:
            out = keyed_uniform_phase(self.seed, _LINK, lnk.code, s)
        else:
            out = self._broadcast(
                keyed_uniform_phase(self.seed, _LINK, lnk.code, _STATIC), state)
        return float(out) if np.ndim(state) == 0 else out

    def chain(self, endpoint, direction):
        return self.chain_phase[(device_of(endpoint), direction)]

    @staticmethod
    def _broadcast(value, state):
        if np.ndim(state) == 0:
            return float(value)
        return np.full(np.shape(state), float(value))


def draw_realization(seed, K, eve_antennas=1, los_magnitude=0.0,
                     internal_offset=0.0, chain_phases=True):
    """Build a :class:`ChannelRealization`.

    ``internal_offset`` sets ``alpha<->a`` minus ``b<->beta``; the default 0
    gives the equal internal phases the four-antenna protocol assumes.
    ``chain_phases=False`` zeroes every transmit/receive chain constant.
    """
    if int(K) != K or K < 1:
        raise InvalidArgumentError("K must be a positive integer")
    if K > MAX_MIRRORS:
        raise CapacityError(f"K={K} exceeds the {MAX_MIRRORS}-mirror limit")
    if int(eve_antennas) != eve_antennas or eve_antennas < 0:
        raise InvalidArgumentError("eve_antennas must be >= 0")
    if not np.isfinite(los_magnitude) or los_magnitude < 0:
        raise InvalidArgumentError("los_magnitude must be >= 0")
    seed = int(seed)
    alpha_a = keyed_uniform_phase(seed, _INTERNAL, 1)
    internal = {
        ("a", "alpha"): float(alpha_a),
        ("b", "beta"): float(pm.sub(alpha_a, internal_offset)),
    }
    chains = {}
    for d, dev in enumerate(("alice", "bob", "eve")):
        for r, direction in enumerate((TRANSMIT, RECEIVE)):
            value = keyed_uniform_phase(seed, _CHAIN, d, r) if chain_phases else 0.0
            chains[(dev, direction)] = float(value)
    los = los_magnitude * np.exp(1j * float(keyed_uniform_phase(seed, _LOS)))
    return ChannelRealization(seed=seed, K=int(K), eve_antennas=int(eve_antennas),
                              los_bias=complex(los), internal_phase=internal,
                              chain_phase=chains)


def oracle_link_phase(env, lnk, state):
    """Ground-truth channel phase, without chain phases, LOS or noise."""
    return env.link_phase(lnk, state)


def default_noise_rng(env, lnk, state, tag=0):
    """Noise stream derived from the identity of one observation."""
    s = np.ascontiguousarray(np.asarray(state, dtype=np.int64))
    ident = zlib.crc32(s.tobytes()) if s.ndim else int(s)
    return np.random.default_rng(
        [env.seed, _NOISE, _endpoint_code(lnk.tx), _endpoint_code(lnk.rx),
         ident, s.size, tag])


def observe_pilot(env, lnk, state, pilot, extra_phase=0.0, rng=None):
    """Samples received on every tone of one pilot transmission.

    ``state`` and ``extra_phase`` may be arrays (broadcast together); the
    result has shape ``broadcast_shape + (S,)``.  ``extra_phase`` carries
    phases injected by the protocol (loop-initiation phases, relayed
    phases).  Raw samples still carry the pilot signs; use
    :func:`despread` before averaging.
    """
    if not isinstance(lnk, LinkId):
        raise InvalidLinkError(f"not a link: {lnk!r}")
    phase = env.link_phase(lnk, state)
    phase = np.add(phase, env.chain(lnk.tx, TRANSMIT))
    phase = np.add(phase, env.chain(lnk.rx, RECEIVE))
    phase = pm.wrap(np.add(phase, extra_phase))
    phase = np.asarray(phase)[..., None]
    samples = pilot.sign_array * np.exp(1j * phase)
    if lnk.kind == OVER_AIR and env.los_bias != 0:
        samples = samples + env.los_bias
    if not pilot.noiseless:
        if rng is None:
            rng = default_noise_rng(env, lnk, state)
        sigma = pilot.noise_std
        noise = rng.standard_normal(samples.shape + (2,))
        samples = samples + sigma * (noise[..., 0] + 1j * noise[..., 1])
    return samples


def despread(samples, pilot):
    """Undo the known pilot signs so all tones add coherently."""
    return np.asarray(samples) * pilot.sign_array


def pilot_phase(samples, pilot):
    """Receiver's estimate: phase of the despread, tone-averaged pilots.

    Batch input gives ``(phases, erased)`` with NaN for erasures.
    """
    return pm.complex_mean_phase_masked(despread(samples, pilot), axis=-1)
