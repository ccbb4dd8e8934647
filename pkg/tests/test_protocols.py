from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasekey import phase_math as pm
from phasekey import protocol_two as p2
from phasekey import protocol_four as p4
from phasekey.analysis import kuiper_uniformity
from phasekey.environment import PilotSpec, draw_realization, link, oracle_link_phase
from phasekey.errors import StateReuseError

NOISELESS = PilotSpec.make(16)
SNR20 = PilotSpec.make(16, 20.0)
SIGMA20 = 10 ** (-20 / 20)  # per-tone phase std at 20 dB


def rechained(env, seed):
    rng = np.random.default_rng(seed)
    return replace(env, chain_phase={k: float(rng.uniform(0, 2 * np.pi)) for k in env.chain_phase})


# ---- two-antenna ----

def test_cycle_matches_oracle_difference():
    env = draw_realization(1, 8)
    res = p2.run_cycle(env, 0, 37, NOISELESS)
    want = pm.sub(oracle_link_phase(env, link("a", "b"), 37), oracle_link_phase(env, link("a", "b"), 0))
    assert not res.erased
    assert pm.circular_distance(res.alice_shared, res.bob_shared) < 1e-9
    assert pm.circular_distance(res.bob_shared, want) < 1e-9
    assert res.state_pair == (0, 37)


def test_cycle_transcript_order():
    res = p2.run_cycle(draw_realization(1, 8), 0, 5, NOISELESS)
    assert [(t.tx, t.state) for t in res.transcript] == [("a", 0), ("a", 5), ("b", 0), ("b", 5)]


def test_cycle_rejects_reference_state():
    with pytest.raises(StateReuseError):
        p2.run_cycle(draw_realization(1, 8), 3, 3, NOISELESS)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 255))
def test_cycle_chain_phase_invariance(chain_seed, state):
    env = draw_realization(4, 8)
    a = p2.run_cycle(env, 0, state, NOISELESS)
    b = p2.run_cycle(rechained(env, chain_seed), 0, state, NOISELESS)
    assert pm.circular_distance(a.alice_shared, b.alice_shared) < 1e-9
    assert pm.circular_distance(a.bob_shared, b.bob_shared) < 1e-9


def test_cycle_noisy_agreement():
    env = draw_realization(5, 16)
    b = p2.run_cycles(env, np.arange(1, 10_001), SNR20, rng=np.random.default_rng(1))
    node_std = np.sqrt(2 * SIGMA20 ** 2 / 16)
    assert np.mean(pm.circular_distance(b.alice_shared, b.bob_shared)) < 2 * node_std


def test_cycle_averaging_gain():
    env = draw_realization(6, 16)
    states = np.arange(1, 10_001)
    truth = p2.run_cycles(env, states, NOISELESS).bob_shared
    b = p2.run_cycles(env, states, SNR20, rng=np.random.default_rng(2))
    var = np.var(pm.signed(pm.sub(b.bob_shared, truth)))
    assert var == pytest.approx(2 * SIGMA20 ** 2 / 16, rel=0.25)


def test_cycle_erasure_is_flagged(monkeypatch):
    env = draw_realization(5, 6)
    real = p2.observe_pilot

    def dead_on_seven(env_, lnk, states, pilot, extra_phase=0.0, rng=None):
        z = real(env_, lnk, states, pilot, extra_phase, rng)
        return np.where(np.asarray(states)[..., None] == 7, 0j, z)

    monkeypatch.setattr(p2, "observe_pilot", dead_on_seven)
    b = p2.run_cycles(env, [6, 7, 8], NOISELESS)
    assert b.erased.tolist() == [False, True, False]
    assert np.isnan(b.alice_shared[1]) and np.isnan(b.bob_shared[1])
    assert p2.shared_phase_stream(env, [6, 7, 8], NOISELESS).states.tolist() == [6, 8]


def test_stream_pairs_agree():
    env = draw_realization(7, 10)
    s = p2.shared_phase_stream(env, np.arange(1, 65), NOISELESS)
    assert len(s) == 64
    assert np.max(pm.circular_distance(s.alice_shared, s.bob_shared)) < 1e-9


def test_stream_uniform_and_uncorrelated():
    env = draw_realization(8, 16)
    s = p2.shared_phase_stream(env, np.arange(1, 10_001), NOISELESS)
    assert kuiper_uniformity(s.bob_shared, 0.01).passed
    z = np.exp(1j * s.bob_shared)
    assert abs(np.mean(z[:-1] * np.conj(z[1:]))) < 3 / np.sqrt(len(z))


def test_stream_empty_and_errors():
    env = draw_realization(7, 10)
    assert len(p2.shared_phase_stream(env, [], NOISELESS)) == 0
    with pytest.raises(StateReuseError):
        p2.shared_phase_stream(env, [1, 2, 1], NOISELESS)
    with pytest.raises(StateReuseError):
        p2.shared_phase_stream(env, [0, 2], NOISELESS)
    used = set()
    p2.shared_phase_stream(env, [1, 2], NOISELESS, used=used)
    with pytest.raises(StateReuseError):
        p2.shared_phase_stream(env, [2, 3], NOISELESS, used=used)


# ---- four-antenna ----

def test_loops_agree_when_internal_phases_equal():
    env = draw_realization(9, 8)
    r = p4.run_loops(env, 11, NOISELESS)
    assert pm.circular_distance(r.alice_shared, r.bob_shared) < 1e-9
    assert len(r.transcript) == 4


def test_loops_match_path_sums_without_chains():
    env = draw_realization(9, 8, chain_phases=False)
    r = p4.run_loops(env, 11, NOISELESS)
    o = lambda u, v: oracle_link_phase(env, link(u, v), 11)  # noqa: E731
    want = pm.add(pm.add(o("alpha", "b"), env.internal_phase[("b", "beta")]), o("beta", "a"))
    assert pm.circular_distance(r.alice_shared, want) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.integers(1, 255))
def test_loops_theta_phi_invariance(theta, phi, state):
    env = draw_realization(10, 8)
    a = p4.run_loops(env, state, NOISELESS, theta=0.0, phi=0.0)
    b = p4.run_loops(env, state, NOISELESS, theta=theta, phi=phi)
    assert pm.circular_distance(a.alice_shared, b.alice_shared) < 1e-9
    assert pm.circular_distance(a.bob_shared, b.bob_shared) < 1e-9


def test_loops_theta_phi_fresh_and_uniform():
    env = draw_realization(10, 16)
    b = p4.run_loops_batch(env, np.arange(10_000), NOISELESS, rng=np.random.default_rng(3))
    assert kuiper_uniformity(b.theta).passed and kuiper_uniformity(b.phi).passed
    assert np.unique(b.theta).size == 10_000


def test_loops_state_reuse():
    env = draw_realization(10, 8)
    used = set()
    p4.run_loops(env, 3, NOISELESS, used=used)
    with pytest.raises(StateReuseError):
        p4.run_loops(env, 3, NOISELESS, used=used)


def test_loops_noisy_disagreement_std():
    env = draw_realization(11, 16)
    b = p4.run_loops_batch(env, np.arange(10_000), SNR20, rng=np.random.default_rng(4))
    d = pm.signed(pm.sub(b.bob_shared, b.alice_shared))
    node_std_two = np.sqrt(2 * SIGMA20 ** 2 / 16)
    assert np.std(d) == pytest.approx(np.sqrt(2) * node_std_two, rel=0.25)
    # zero-centred
    assert abs(np.mean(d)) < 3 * np.std(d) / np.sqrt(d.size)


def test_loops_shared_uniform():
    env = draw_realization(12, 16)
    b = p4.run_loops_batch(env, np.arange(10_000), NOISELESS)
    assert kuiper_uniformity(b.alice_shared).passed


def test_calibration_zero_offset():
    delta = p4.calibrate_internal_offset(draw_realization(13, 8), 4)
    assert pm.circular_distance(delta, 0.0) < 1e-9


def test_calibration_exact_offset():
    env = draw_realization(13, 8, internal_offset=0.7)
    delta = p4.calibrate_internal_offset(env, 1)
    assert pm.circular_distance(delta, 0.7) < 1e-9


def test_calibration_noisy():
    env = draw_realization(14, 12, internal_offset=2.2)
    delta = p4.calibrate_internal_offset(env, 100, SNR20, rng=np.random.default_rng(5))
    per_round = np.sqrt(4 * SIGMA20 ** 2 / 16)
    assert pm.circular_distance(delta, 2.2) < 3 * per_round / np.sqrt(100)


def test_calibrated_loops_agree():
    env = draw_realization(15, 12, internal_offset=1.9)
    delta = p4.calibrate_internal_offset(env, 8)
    b = p4.run_loops_batch(env, np.arange(1, 1001), NOISELESS, offset=delta)
    assert np.max(pm.circular_distance(b.alice_shared, b.bob_shared)) < 1e-9
    raw = p4.run_loops_batch(env, np.arange(1, 1001), NOISELESS)
    assert np.min(pm.circular_distance(raw.alice_shared, raw.bob_shared)) > 0.1


def test_calibration_states_are_reserved_top():
    env = draw_realization(15, 6)
    assert p4.calibration_states(env, 3).tolist() == [63, 62, 61]
