"""Experiment drivers.  Each returns a :class:`Report` and can write it as CSV.

Every random stream is keyed by (seed, purpose, chunk index), so a rerun
with the same configuration reproduces the report byte for byte.
"""

import csv
from dataclasses import dataclass
import io
import sys

import numpy as np

from .. import adversary
from .. import phase_math as pm
from ..analysis import bit_error_rate, kuiper_uniformity
from ..environment import PilotSpec, draw_realization, keyed_uniform_phase
from ..errors import ConfigError, InsufficientKeyMaterialError
from ..keylink import KeyExchangeParams, PhasePool, exchange_keys
from ..protocol_four import calibrate_internal_offset, run_loops_batch
from ..protocol_two import run_cycles
from .replay import read_trace, replay_ingest, survivor_count, synthetic_trace

SIGNIFICANCE = 0.01
MI_LIMIT = 0.02
AGREEMENT_FLOOR = 0.99
CALIBRATION_ROUNDS = 64
CHUNK = 100_000
EXCHANGE_CHUNK = 250

_TAG_PROTOCOL = 0x5EED
_TAG_KEYS = 0x4B45
_TAG_OFFSET = 0x0FF5


@dataclass
class Report:
    kind: str
    columns: list
    rows: list
    passed: bool
    summary: str

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def build_environment(cfg):
    # the four-antenna protocol gets a nonzero wired-path difference to calibrate away
    offset = float(keyed_uniform_phase(cfg.seed, _TAG_OFFSET)) if cfg.protocol == "four" else 0.0
    return draw_realization(cfg.seed, cfg.k, cfg.n, cfg.los_magnitude, internal_offset=offset)


def _capacity(env, protocol):
    reserved = 1 + (CALIBRATION_ROUNDS if protocol == "four" else 0)
    return env.state_count - reserved


def protocol_batches(env, cfg, pilot, rounds):
    """Yield protocol batches covering states ``1 .. rounds`` in chunks."""
    if rounds > _capacity(env, cfg.protocol):
        raise ConfigError("rounds", f"{rounds} rounds need more than the 2^{cfg.k} mirror states")
    offset = 0.0
    if cfg.protocol == "four":
        offset = calibrate_internal_offset(
            env, CALIBRATION_ROUNDS, pilot,
            rng=np.random.default_rng([cfg.seed, _TAG_PROTOCOL, 0xCA1]))
    for c, lo in enumerate(range(1, rounds + 1, CHUNK)):
        states = np.arange(lo, min(lo + CHUNK, rounds + 1), dtype=np.int64)
        rng = np.random.default_rng([cfg.seed, _TAG_PROTOCOL, c])
        if cfg.protocol == "two":
            yield run_cycles(env, states, pilot, rng=rng)
        else:
            yield run_loops_batch(env, states, pilot, rng=rng, offset=offset)


def shared_streams(env, cfg, pilot, count):
    """``count`` aligned (alice, bob) shared phases, skipping erasures."""
    capacity = _capacity(env, cfg.protocol)
    if count > capacity:
        raise ConfigError("rounds", f"{count} shared phases need more than the 2^{cfg.k} mirror states")
    want = min(count + max(16, count // 100), capacity)
    alice, bob = [], []
    for batch in protocol_batches(env, cfg, pilot, want):
        kept = batch.kept()
        alice.append(kept.alice_shared)
        bob.append(kept.bob_shared)
    alice, bob = np.concatenate(alice), np.concatenate(bob)
    if alice.size < count:
        raise InsufficientKeyMaterialError(f"only {alice.size} of {count} shared phases survived")
    return alice[:count], bob[:count]


def _pilot(cfg, snr_db=None):
    return PilotSpec.make(cfg.s, cfg.snr_db if snr_db is None else snr_db, seed=cfg.seed)


def uniformity(cfg):
    env = build_environment(cfg)
    alice, bob = shared_streams(env, cfg, _pilot(cfg), cfg.rounds)
    cols = ["protocol", "party", "rounds", "statistic", "modified", "critical",
            "p_value", "significance", "pass"]
    rows = []
    for party, x in (("alice", alice), ("bob", bob)):
        rep = kuiper_uniformity(x, SIGNIFICANCE)
        rows.append(dict(protocol=cfg.protocol, party=party, rounds=rep.n,
                         statistic=rep.statistic, modified=rep.modified,
                         critical=rep.critical, p_value=rep.p_value,
                         significance=SIGNIFICANCE, pass_=rep.passed))
    return _finish("uniformity", cols, rows,
                   f"Kuiper V on {cfg.rounds} shared phases ({cfg.protocol}-antenna)")


def leakage(cfg):
    if cfg.rounds < 10 * 16 * 16:
        raise ConfigError("rounds", "leakage needs at least 2560 rounds for 16x16 bins")
    env = build_environment(cfg)
    pilot = _pilot(cfg)
    shared, phases, states = [], [], []
    protocol = None
    for batch in protocol_batches(env, cfg, pilot, cfg.rounds):
        kept = batch.kept()
        obs = adversary.record_batch(env, kept, pilot, cfg.eve_snr_db)
        protocol = obs.protocol
        shared.append(kept.alice_shared)
        phases.append(obs.phases)
        states.append(obs.states)
    obs = adversary.EveObservationSet(protocol, np.concatenate(phases), np.concatenate(states))
    estimates = adversary.leakage_estimates(obs, np.concatenate(shared))
    cols = ["protocol", "observable", "rounds", "mi_bits", "plug_in", "bias_correction",
            "limit", "pass"]
    rows = [dict(protocol=cfg.protocol, observable=name, rounds=est.n, mi_bits=est.bits,
                 plug_in=est.plug_in, bias_correction=est.bias_correction,
                 limit=MI_LIMIT, pass_=est.bits <= MI_LIMIT)
            for name, est in estimates]
    return _finish("leakage", cols, rows,
                   f"max MI over {len(rows)} Eve observables = "
                   f"{max(r['mi_bits'] for r in rows):.5f} bits (limit {MI_LIMIT})")


def _exchange_point(cfg, snr_db):
    """Run ``cfg.rounds`` key exchanges at one SNR; returns a result row."""
    env = build_environment(cfg)
    params = KeyExchangeParams.for_key(cfg.l, cfg.r, cfg.m)
    alice, bob = shared_streams(env, cfg, _pilot(cfg, snr_db), cfg.rounds * params.N_p)
    pool = PhasePool(alice, bob)
    master, slave = pool.take(cfg.rounds * params.N_p)
    master = master.reshape(cfg.rounds, params.N_p)
    slave = slave.reshape(cfg.rounds, params.N_p)
    rng = np.random.default_rng([cfg.seed, _TAG_KEYS])
    keys, got, eve = [], [], []
    for lo in range(0, cfg.rounds, EXCHANGE_CHUNK):
        k, s, e = exchange_keys(params, master[lo:lo + EXCHANGE_CHUNK],
                                slave[lo:lo + EXCHANGE_CHUNK], rng=rng)
        keys.append(k)
        got.append(s)
        eve.append(e)
    keys, got, eve = np.concatenate(keys), np.concatenate(got), np.concatenate(eve)
    agreement = float(np.mean(np.all(keys == got, axis=1)))
    eve_ber = bit_error_rate(keys, eve)
    spread = float(np.sqrt(np.mean(pm.signed(pm.sub(slave, master)) ** 2)))
    # Eve's bits are independent of the key, so her error count is binomial
    eve_tol = max(0.01, 5 * 0.5 / np.sqrt(keys.size))
    return dict(protocol=cfg.protocol, snr_db=float(snr_db), exchanges=cfg.rounds,
                l=params.L, r=params.r, m=params.m, n_p=params.N_p,
                agreement_rate=agreement, bit_agreement=1.0 - bit_error_rate(keys, got),
                eve_ber=eve_ber, phase_disagreement_rms=spread,
                pass_=agreement >= AGREEMENT_FLOOR and abs(eve_ber - 0.5) <= eve_tol)


_EXCHANGE_COLS = ["protocol", "snr_db", "exchanges", "l", "r", "m", "n_p", "agreement_rate",
                  "bit_agreement", "eve_ber", "phase_disagreement_rms"]


def exchange(cfg):
    row = _exchange_point(cfg, cfg.snr_db)
    return _finish("exchange", _EXCHANGE_COLS + ["pass"], [row],
                   f"{cfg.rounds} exchanges: agreement {row['agreement_rate']:.4f}, "
                   f"Eve BER {row['eve_ber']:.4f}")


def sweep(cfg):
    rows = [_exchange_point(cfg, snr) for snr in cfg.sweep_snr_db]
    rates = [r["agreement_rate"] for r in rows]
    monotone = all(b >= a for a, b in zip(rates, rates[1:]))
    for r in rows:
        r["pass_"] = monotone
    return _finish("sweep", _EXCHANGE_COLS + ["pass"], rows,
                   "agreement vs SNR: " + ", ".join(
                       f"{r['snr_db']:g} dB -> {r['agreement_rate']:.4f}" for r in rows)
                   + ("" if monotone else " (not monotone)"))


def replay(cfg):
    if cfg.trace_path:
        trace = read_trace(cfg.trace_path)
    else:
        trace = synthetic_trace(cfg.rounds, cfg.seed, bias=complex(cfg.los_magnitude, 0.0))
    phases = replay_ingest(trace, cfg.discard_fraction)
    expected = survivor_count(len(trace), cfg.discard_fraction)
    rep = kuiper_uniformity(phases, SIGNIFICANCE)
    row = dict(source=trace.source, records=len(trace), discard_fraction=cfg.discard_fraction,
               survivors=phases.size, expected_survivors=expected, statistic=rep.statistic,
               modified=rep.modified, critical=rep.critical, p_value=rep.p_value,
               pass_=rep.passed and phases.size == expected)
    cols = ["source", "records", "discard_fraction", "survivors", "expected_survivors",
            "statistic", "modified", "critical", "p_value", "pass"]
    return _finish("replay", cols, [row],
                   f"{phases.size} of {len(trace)} samples kept, Kuiper p = {rep.p_value:.3g}")


def _finish(kind, cols, rows, detail):
    for r in rows:
        r["pass"] = bool(r.pop("pass_"))
    passed = all(r["pass"] for r in rows)
    return Report(kind, cols, rows, passed, f"{kind}: {'PASS' if passed else 'FAIL'}: {detail}")


EXPERIMENTS = {
    "uniformity": uniformity,
    "leakage": leakage,
    "exchange": exchange,
    "sweep": sweep,
    "replay": replay,
}


def run_experiment(cfg, out=None, stream=None):
    """Run ``cfg.kind``, write the CSV report and print the summary line."""
    report = EXPERIMENTS[cfg.kind](cfg)
    report.write(cfg.out if out is None else out)
    print(report.summary, file=sys.stdout if stream is None else stream)
    return report
