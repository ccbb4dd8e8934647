"""Two-antenna key sharing: one four-transmission cycle per shared phase.

Alice (antenna ``a``, owner of the mirrors) sends a pilot at the reference
state ``i0`` and again at a fresh state ``i``; Bob then sends two pilots
back while Alice's mirrors revisit ``i0`` and ``i``.  Each side differences
its two averaged pilot phases, which cancels its transmit/receive chain
phases and, by reciprocity, leaves both with ``ab^i - ab^i0``.
"""

from dataclasses import dataclass
from typing import NamedTuple
import zlib

import numpy as np

from . import phase_math as pm
from .environment import REFERENCE_STATE, LinkId, observe_pilot, pilot_phase
from .errors import InvalidArgumentError, StateReuseError

A_TO_B = LinkId("a", "b")
B_TO_A = LinkId("b", "a")

_TAG = 0x2A


class Transmission(NamedTuple):
    """One over-air pilot burst as Eve could see it."""

    tx: str
    rx: str
    state: int
    extra_phase: float = 0.0


@dataclass(frozen=True)
class CycleResult:
    alice_shared: float
    bob_shared: float
    transcript: tuple
    state_pair: tuple
    erased: bool = False


@dataclass(frozen=True)
class CycleBatch:
    """Many cycles against one reference state, as parallel arrays."""

    states: np.ndarray
    alice_shared: np.ndarray
    bob_shared: np.ndarray
    erased: np.ndarray
    i0: int = REFERENCE_STATE

    def __len__(self):
        return len(self.states)

    def kept(self):
        """Drop erased cycles; their states are not retried."""
        ok = ~self.erased
        return CycleBatch(self.states[ok], self.alice_shared[ok],
                          self.bob_shared[ok], self.erased[ok], self.i0)

    def pairs(self):
        return list(zip(self.alice_shared.tolist(), self.bob_shared.tolist()))

    def transcripts(self):
        """Transmission records for every cycle, in protocol order."""
        return [cycle_transcript(self.i0, int(s)) for s in self.states]


def cycle_transcript(i0, i):
    return (
        Transmission("a", "b", i0),
        Transmission("a", "b", i),
        Transmission("b", "a", i0),
        Transmission("b", "a", i),
    )


def _batch_rng(env, states, i0):
    s = np.ascontiguousarray(states, dtype=np.int64)
    return np.random.default_rng([env.seed, _TAG, i0, s.size, zlib.crc32(s.tobytes())])


def run_cycles(env, states, pilot, i0=REFERENCE_STATE, rng=None):
    """Vectorised cycles, one per entry of ``states``.

    Every cycle re-transmits at ``i0`` with fresh noise.  Erased cycles
    (degenerate pilot average) are flagged and carry NaN phases.
    """
    states = env.check_state(np.atleast_1d(states))
    i0 = int(env.check_state(i0))
    if np.any(states == i0):
        raise StateReuseError("a cycle state equals the reference state")
    if rng is None:
        rng = _batch_rng(env, states, i0)
    ref = np.full(states.shape, i0)
    ab_ref, e1 = pilot_phase(observe_pilot(env, A_TO_B, ref, pilot, rng=rng), pilot)
    ab_i, e2 = pilot_phase(observe_pilot(env, A_TO_B, states, pilot, rng=rng), pilot)
    ba_ref, e3 = pilot_phase(observe_pilot(env, B_TO_A, ref, pilot, rng=rng), pilot)
    ba_i, e4 = pilot_phase(observe_pilot(env, B_TO_A, states, pilot, rng=rng), pilot)
    erased = e1 | e2 | e3 | e4
    with np.errstate(invalid="ignore"):
        bob = np.where(erased, np.nan, pm.sub(np.nan_to_num(ab_i), np.nan_to_num(ab_ref)))
        alice = np.where(erased, np.nan, pm.sub(np.nan_to_num(ba_i), np.nan_to_num(ba_ref)))
    return CycleBatch(states, alice, bob, erased, i0)


def run_cycle(env, i0, i, pilot, rng=None):
    """One cycle producing one shared phase at each node."""
    if int(i) == int(i0):
        raise StateReuseError("state i must differ from the reference state i0")
    if rng is None:
        rng = np.random.default_rng([env.seed, _TAG, int(i0), int(i)])
    batch = run_cycles(env, [i], pilot, i0=i0, rng=rng)
    return CycleResult(
        alice_shared=float(batch.alice_shared[0]),
        bob_shared=float(batch.bob_shared[0]),
        transcript=cycle_transcript(int(i0), int(i)),
        state_pair=(int(i0), int(i)),
        erased=bool(batch.erased[0]),
    )


def claim_states(states, used=None, reserved=(REFERENCE_STATE,)):
    """Validate that ``states`` are fresh, then mark them used."""
    states = np.asarray(states, dtype=np.int64).ravel()
    if len(np.unique(states)) != len(states):
        raise StateReuseError("state sequence contains duplicates")
    if np.isin(states, np.asarray(reserved, dtype=np.int64)).any():
        raise StateReuseError("state sequence contains a reserved state")
    if used is not None:
        if np.isin(states, np.fromiter(used, dtype=np.int64, count=len(used))).any():
            raise StateReuseError("state already consumed in this session")
        used.update(states.tolist())
    return states


def shared_phase_stream(env, state_sequence, pilot, rng=None, used=None):
    """Run one cycle per state against the fixed reference ``i0 = 0``.

    Returns a :class:`CycleBatch` with erased cycles removed.  Pass a
    ``used`` set to enforce one use per state across calls.
    """
    states = claim_states(state_sequence, used)
    if states.size == 0:
        empty = np.empty(0)
        return CycleBatch(states, empty, empty.copy(), np.empty(0, dtype=bool))
    if states.ndim != 1:
        raise InvalidArgumentError("state_sequence must be one-dimensional")
    return run_cycles(env, states, pilot, rng=rng).kept()
