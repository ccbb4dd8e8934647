"""Four-antenna loop protocol.

Alice owns antennas ``a`` and ``alpha``, Bob owns ``b`` and ``beta``.  For
each mirror state two loops are traversed:

* Alice injects a random phase ``theta`` at ``alpha``; it travels
  ``alpha -> b``, through Bob's wired path ``b -> beta``, and back
  ``beta -> a``.  Alice removes ``theta`` and keeps
  ``alpha_b + b_beta + beta_a``.
* Bob injects ``phi`` at ``b``; it travels ``b -> alpha -> a -> beta``
  and Bob keeps ``b_alpha + alpha_a + a_beta``.

Reciprocity makes the two equal once the constant difference of the wired
paths has been calibrated out.  Phases are measured between two antennas
of the same unit, so no time/frequency synchronisation between nodes is
involved.  Relays re-transmit a unit pilot carrying the phase they
measured; each over-air hop adds its own noise.
"""

from dataclasses import dataclass
import zlib

import numpy as np

from . import phase_math as pm
from .environment import LinkId, PilotSpec, observe_pilot, pilot_phase
from .errors import DegenerateAverageError, InvalidArgumentError
from .protocol_two import Transmission, claim_states

ALPHA_TO_B = LinkId("alpha", "b")
BETA_TO_A = LinkId("beta", "a")
B_TO_ALPHA = LinkId("b", "alpha")
A_TO_BETA = LinkId("a", "beta")
ALPHA_A = ("a", "alpha")
B_BETA = ("b", "beta")

_TAG = 0x4B


@dataclass(frozen=True)
class LoopResult:
    alice_shared: float
    bob_shared: float
    theta: float
    phi: float
    transcript: tuple
    erased: bool = False


@dataclass(frozen=True)
class LoopBatch:
    """Double loops over many mirror states as parallel arrays.

    ``hop_extra`` has shape ``(M, 4)``: the phase injected into each
    over-air hop, in transcript order.
    """

    states: np.ndarray
    alice_shared: np.ndarray
    bob_shared: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    hop_extra: np.ndarray
    erased: np.ndarray

    def __len__(self):
        return len(self.states)

    def kept(self):
        ok = ~self.erased
        return LoopBatch(self.states[ok], self.alice_shared[ok], self.bob_shared[ok],
                         self.theta[ok], self.phi[ok], self.hop_extra[ok],
                         self.erased[ok])

    def pairs(self):
        return list(zip(self.alice_shared.tolist(), self.bob_shared.tolist()))

    def transcripts(self):
        return [loop_transcript(int(s), e) for s, e in zip(self.states, self.hop_extra)]


def loop_transcript(i, extras):
    return (
        Transmission("alpha", "b", i, float(extras[0])),
        Transmission("beta", "a", i, float(extras[1])),
        Transmission("b", "alpha", i, float(extras[2])),
        Transmission("a", "beta", i, float(extras[3])),
    )


def _hop(env, lnk, states, pilot, extra, rng):
    return pilot_phase(observe_pilot(env, lnk, states, pilot, extra, rng=rng), pilot)


def run_loops_batch(env, states, pilot, rng=None, theta=None, phi=None, offset=0.0):
    """Both loops for every state in ``states``.

    ``offset`` is the calibrated wired-path difference; it is removed from
    Bob's value.  ``theta``/``phi`` default to fresh uniform draws.
    """
    states = env.check_state(np.atleast_1d(states))
    if rng is None:
        s = np.ascontiguousarray(states)
        rng = np.random.default_rng([env.seed, _TAG, s.size, zlib.crc32(s.tobytes())])
    m = states.shape
    theta = rng.uniform(0.0, pm.TWO_PI, m) if theta is None else np.broadcast_to(
        pm.wrap(np.asarray(theta, dtype=float)), m)
    phi = rng.uniform(0.0, pm.TWO_PI, m) if phi is None else np.broadcast_to(
        pm.wrap(np.asarray(phi, dtype=float)), m)
    b_beta = env.internal_phase[B_BETA]
    alpha_a = env.internal_phase[ALPHA_A]

    # loop 1: alpha -> b => b -> beta (wired) => beta -> a
    at_b, e1 = _hop(env, ALPHA_TO_B, states, pilot, theta, rng)
    relay1 = pm.add(np.nan_to_num(at_b), b_beta)
    at_a, e2 = _hop(env, BETA_TO_A, states, pilot, relay1, rng)
    # loop 2: b -> alpha => alpha -> a (wired) => a -> beta
    at_alpha, e3 = _hop(env, B_TO_ALPHA, states, pilot, phi, rng)
    relay2 = pm.add(np.nan_to_num(at_alpha), alpha_a)
    at_beta, e4 = _hop(env, A_TO_BETA, states, pilot, relay2, rng)

    erased = e1 | e2 | e3 | e4
    alice = pm.sub(np.nan_to_num(at_a), theta)
    bob = pm.sub(pm.sub(np.nan_to_num(at_beta), phi), offset)
    extras = np.stack([theta, relay1, phi, relay2], axis=-1)
    return LoopBatch(states, np.where(erased, np.nan, alice),
                     np.where(erased, np.nan, bob), np.asarray(theta, float),
                     np.asarray(phi, float), extras, erased)


def run_loops(env, i, pilot, rng=None, theta=None, phi=None, offset=0.0, used=None):
    """Double loop at a single mirror state ``i``.

    With a ``used`` set the state is checked for reuse and then claimed.
    """
    if used is not None:
        claim_states([i], used, reserved=())
    if rng is None:
        rng = np.random.default_rng([env.seed, _TAG, int(i)])
    b = run_loops_batch(env, [i], pilot, rng=rng, theta=theta, phi=phi, offset=offset)
    return LoopResult(
        alice_shared=float(b.alice_shared[0]),
        bob_shared=float(b.bob_shared[0]),
        theta=float(b.theta[0]),
        phi=float(b.phi[0]),
        transcript=loop_transcript(int(i), b.hop_extra[0]),
        erased=bool(b.erased[0]),
    )


def calibration_states(env, rounds):
    """Reserved states used only for calibration: the top of the state space."""
    if rounds < 1:
        raise InvalidArgumentError("calibration_rounds must be >= 1")
    if rounds >= env.state_count:
        raise InvalidArgumentError("not enough mirror states for calibration")
    return env.state_count - 1 - np.arange(rounds, dtype=np.int64)


def calibrate_internal_offset(env, calibration_rounds, pilot=None, rng=None, used=None):
    """Estimate ``alpha_a - b_beta`` from loop pairs at reserved states.

    Each round contributes ``bob - alice``; the estimate is their circular
    mean.  Pass the returned value as ``offset`` to the loop functions.
    """
    pilot = PilotSpec.make() if pilot is None else pilot
    states = calibration_states(env, calibration_rounds)
    if used is not None:
        claim_states(states, used, reserved=())
    if rng is None:
        rng = np.random.default_rng([env.seed, _TAG, 0xCA1, int(calibration_rounds)])
    b = run_loops_batch(env, states, pilot, rng=rng).kept()
    if len(b) == 0:
        raise DegenerateAverageError("every calibration round was erased")
    diff = pm.sub(b.bob_shared, b.alice_shared)
    return pm.complex_mean_phase(np.exp(1j * diff))
