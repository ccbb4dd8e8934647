"""Passive multi-antenna eavesdropper.

Eve knows the protocol, hears every over-air pilot on each of her ``n``
antennas, averages the tones like the legitimate receivers do, and then
tries to pin down the shared phase.  She is noiseless unless told
otherwise, which is the worst case for Alice and Bob.
"""

from dataclasses import dataclass
from itertools import combinations
import zlib

import numpy as np

from . import phase_math as pm
from .analysis import phase_mi
from .environment import LinkId, PilotSpec, observe_pilot, pilot_phase
from .errors import InconsistentObservationError, InvalidArgumentError
from .keylink.psk import psk_demap

TWO = "two-antenna"
FOUR = "four-antenna"

LABELS = {
    TWO: (("a", "i0", 1), ("a", "i", 2), ("b", "i0", 3), ("b", "i", 4)),
    FOUR: (("alpha", "i", 1), ("beta", "i", 2), ("b", "i", 3), ("a", "i", 4)),
}


@dataclass(frozen=True)
class EveObservationSet:
    """Eve's averaged phases, shape ``(rounds, n, 4)``.

    Column ``t`` of the last axis is transmission ``t`` of the round, as
    described by ``labels[t] = (transmitter, state tag, index)``.
    """

    protocol: str
    phases: np.ndarray
    states: np.ndarray

    @property
    def antenna_count(self):
        return self.phases.shape[1]

    @property
    def rounds(self):
        return self.phases.shape[0]

    @property
    def labels(self):
        return LABELS[self.protocol]

    @property
    def per_antenna(self):
        """``{"e1": [(label, phase), ...], ...}`` for the first round."""
        return {
            f"e{k + 1}": list(zip(self.labels, self.phases[0, k].tolist()))
            for k in range(self.antenna_count)
        }

    def columns(self):
        """Yield ``(name, phases over rounds)`` for every single observation."""
        for k in range(self.antenna_count):
            for t, (tx, tag, idx) in enumerate(self.labels):
                yield f"e{k + 1}:{idx}", self.phases[:, k, t]


def _protocol_of(transcript):
    first = transcript[0].tx
    if first == "a":
        return TWO
    if first == "alpha":
        return FOUR
    raise InvalidArgumentError(f"unrecognised transcript starting at {first!r}")


def _record(env, protocol, txs, states, extras, pilot, rng):
    n = env.eve_antennas
    rounds = len(states[0])
    out = np.empty((rounds, n, 4))
    for t in range(4):
        for k, e in enumerate(env.eve_endpoints):
            ph, erased = pilot_phase(
                observe_pilot(env, LinkId(txs[t], e), states[t], pilot, extras[t], rng=rng),
                pilot)
            out[:, k, t] = ph
    return EveObservationSet(protocol, out, np.asarray(states[1], dtype=np.int64))


def record_cycle(env, transcript, pilot, eve_snr_db=float("inf"), rng=None):
    """Eve's view of one protocol round given its public transcript."""
    transcript = tuple(transcript)
    if len(transcript) != 4:
        raise InvalidArgumentError("a round has exactly four over-air transmissions")
    protocol = _protocol_of(transcript)
    eve_pilot = PilotSpec(pilot.tone_count, pilot.signs, eve_snr_db)
    txs = [tr.tx for tr in transcript]
    states = [np.array([tr.state]) for tr in transcript]
    extras = [np.array([tr.extra_phase]) for tr in transcript]
    if rng is None and not eve_pilot.noiseless:
        rng = np.random.default_rng([env.seed, 0xE7E, int(transcript[1].state)])
    return _record(env, protocol, txs, states, extras, eve_pilot, rng)


def record_batch(env, batch, pilot, eve_snr_db=float("inf"), rng=None):
    """Eve's view of every round in a ``CycleBatch`` or ``LoopBatch``."""
    eve_pilot = PilotSpec(pilot.tone_count, pilot.signs, eve_snr_db)
    s = np.asarray(batch.states)
    if rng is None and not eve_pilot.noiseless:
        c = np.ascontiguousarray(s, dtype=np.int64)
        rng = np.random.default_rng([env.seed, 0xE7E, c.size, zlib.crc32(c.tobytes())])
    if hasattr(batch, "hop_extra"):
        txs = [label[0] for label in LABELS[FOUR]]
        extras = [batch.hop_extra[:, t] for t in range(4)]
        return _record(env, FOUR, txs, [s] * 4, extras, eve_pilot, rng)
    ref = np.full(s.shape, batch.i0)
    txs = [label[0] for label in LABELS[TWO]]
    zero = np.zeros(s.shape)
    return _record(env, TWO, txs, [ref, s, ref, s], [zero] * 4, eve_pilot, rng)


@dataclass(frozen=True)
class RecoveryAttempt:
    """Solution family of Eve's under-determined loop equations.

    For antenna ``k``::

        alpha_b + m2_k = y1_k        (from observation ii)
        alpha_b + m4_k = y2_k        (from observation iv)

    with ``m2_k``, ``m4_k`` and ``alpha_b`` unknown.  The family is swept
    through the free unknown ``m2_1``.
    """

    target: str
    posterior_samples: np.ndarray
    free_values: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    method_note: str

    def solve(self, free_value):
        """Member of the family with ``m2_1 = free_value``: ``(alpha_b, m2, m4)``."""
        alpha_b = pm.sub(self.y1[0], free_value)
        return alpha_b, pm.sub(self.y1, alpha_b), pm.sub(self.y2, alpha_b)

    def residual(self, alpha_b, m2, m4):
        """Largest circular violation of the equations by a candidate."""
        r1 = pm.circular_distance(pm.add(alpha_b, m2), self.y1)
        r2 = pm.circular_distance(pm.add(alpha_b, m4), self.y2)
        return float(max(np.max(r1), np.max(r2)))

    def max_residual(self):
        """Worst residual over all posterior samples."""
        worst = 0.0
        for a in self.posterior_samples:
            worst = max(worst, self.residual(a, pm.sub(self.y1, a), pm.sub(self.y2, a)))
        return worst

    def nearest_sample_distance(self, value):
        return float(np.min(pm.circular_distance(self.posterior_samples, value)))


def attempt_recovery_four(obs, known_internal, trials=10_000, round_index=0):
    """Enumerate Eve's candidates for ``alpha_b`` in one four-antenna round.

    ``known_internal`` is the wired-path phase Eve is granted: one value
    when ``alpha_a == b_beta``, or the pair ``(alpha_a, b_beta)``.
    """
    if obs.protocol != FOUR:
        raise InvalidArgumentError("recovery needs a four-antenna observation set")
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    if np.ndim(known_internal) == 0:
        alpha_a = b_beta = float(known_internal)
    else:
        alpha_a, b_beta = (float(v) for v in known_internal)
    row = obs.phases[round_index]
    if not np.all(np.isfinite(row)):
        raise InconsistentObservationError("observation set contains erasures")
    y1 = pm.sub(row[:, 1], b_beta)
    y2 = pm.sub(row[:, 3], alpha_a)
    grid = pm.TWO_PI * np.arange(trials) / trials
    samples = pm.sub(y1[0], grid)
    return RecoveryAttempt(
        target="alpha_b",
        posterior_samples=np.atleast_1d(samples),
        free_values=grid,
        y1=np.atleast_1d(y1),
        y2=np.atleast_1d(y2),
        method_note=(f"{obs.antenna_count} antenna(s): 2 equations each, "
                     f"1 + 2n unknowns; free unknown m2_1 swept on a "
                     f"{trials}-point grid from 0"),
    )


def rotation_guess(obs):
    """Eve's own analogue of the shared phase, one per round."""
    p = obs.phases[:, 0, :]
    # two-antenna: ae^i - ae^i0; four-antenna: (ii) - (i), where theta cancels
    return pm.sub(p[:, 1], p[:, 0])


def eve_demodulate(masked_symbols, obs=None, m=2):
    """Eve's best-effort bits from masked PSK phases.

    Without key knowledge she de-rotates by a guess (zero, or her own
    analogue of the shared phase when ``obs`` covers the same rounds) and
    takes the nearest constellation point.
    """
    y = np.asarray(masked_symbols, dtype=float).ravel()
    if y.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if obs is not None:
        guess = rotation_guess(obs)
        if guess.size != y.size:
            raise InvalidArgumentError("observation rounds must match the symbol count")
        y = pm.sub(y, guess)
    return psk_demap(y, m)


def leakage_estimates(obs, shared, bins=(16, 16)):
    """Binned MI between the shared phase and each Eve observation, and
    between the shared phase and every pairwise difference of them.

    Returns a list of ``(name, MIEstimate)``.
    """
    cols = list(obs.columns())
    out = [(name, phase_mi(col, shared, bins)) for name, col in cols]
    for (n1, c1), (n2, c2) in combinations(cols, 2):
        out.append((f"{n2}-{n1}", phase_mi(pm.sub(c2, c1), shared, bins)))
    return out
