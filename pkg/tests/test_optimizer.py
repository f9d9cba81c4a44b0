import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statsched import (
    CorrelationSet,
    ProblemConfig,
    ScheduleVars,
    afw_schedule,
    lmo_alpha,
    lmo_p,
    round_schedule,
)
from statsched.afw import step_size, write_trace_csv


def _brute_force_alpha(score, l_max):
    """Best 0/1 activation per RBG by enumerating every subset."""
    i_, n_, l_ = score.shape
    best = np.zeros_like(score)
    for n in range(n_):
        flat = score[:, n, :].reshape(-1)
        best_val, best_v = -np.inf, None
        for size in range(min(l_max, flat.size) + 1):
            for combo in itertools.combinations(range(flat.size), size):
                v = np.zeros(flat.size)
                v[list(combo)] = 1.0
                val = float(v @ flat)
                if val > best_val + 1e-15:
                    best_val, best_v = val, v
        best[:, n, :] = best_v.reshape(i_, l_)
    return best


def test_step_size_schedule():
    assert step_size(0) == 1.0
    assert step_size(2) == 0.5
    assert 0 < step_size(10_000) < 1e-3


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    n_users=st.integers(1, 4),
    n_rbgs=st.integers(1, 2),
    n_streams=st.integers(1, 3),
    l_max=st.integers(1, 6),
)
def test_lmo_alpha_matches_enumeration(seed, n_users, n_rbgs, n_streams, l_max):
    rng = np.random.Generator(np.random.Philox(seed))
    score = rng.normal(size=(n_users, n_rbgs, n_streams))
    vertex = lmo_alpha(score, l_max)
    brute = _brute_force_alpha(score, l_max)
    # equal objective value (vertex choice may differ only on exact ties)
    np.testing.assert_allclose(
        (vertex * score).sum(axis=(0, 2)),
        (brute * score).sum(axis=(0, 2)),
        atol=1e-12,
    )
    assert set(np.unique(vertex)) <= {0.0, 1.0}
    assert vertex.sum(axis=(0, 2)).max() <= l_max


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), p_max=st.floats(0.5, 20.0))
def test_lmo_p_matches_enumeration(seed, p_max):
    rng = np.random.Generator(np.random.Philox(seed))
    score = rng.normal(size=(3, 2, 2))
    vertex = lmo_p(score, p_max)
    # candidate vertices: zero and p_max on each coordinate
    best = max(0.0, float(score.max()) * p_max)
    np.testing.assert_allclose(float((vertex * score).sum()), best, atol=1e-12)
    assert vertex.min() >= 0 and vertex.sum() <= p_max + 1e-12


def test_lmo_alpha_tie_breaks_low_index():
    score = np.ones((3, 1, 1))
    vertex = lmo_alpha(score, 2)
    np.testing.assert_array_equal(vertex[:, 0, 0], [1.0, 1.0, 0.0])


def test_lmo_p_ignores_nonpositive_scores():
    assert lmo_p(-np.ones((2, 1, 1)), 10.0).sum() == 0.0


def test_round_schedule_properties(random_corr, small_config):
    alpha = np.array([0.9, 0.55, 0.45, 0.7]).reshape(4, 1, 1)
    p = np.array([4.0, 2.0, 3.0, 1.0]).reshape(4, 1, 1)
    rounded = round_schedule(alpha, p, random_corr, small_config)
    np.testing.assert_array_equal(rounded.alpha_bin[:, 0, 0], [1, 1, 0, 1])
    # deactivated stream loses its power, total spent power is preserved
    assert rounded.p[2, 0, 0] == 0.0
    np.testing.assert_allclose(rounded.p.sum(), p.sum())
    np.testing.assert_allclose(rounded.p[0, 0, 0], 4.0 * 10.0 / 7.0)
    assert np.all(rounded.achieved_rates[[0, 1, 3]] > 0)
    assert rounded.achieved_rates[2] == 0.0


def test_round_schedule_respects_stream_cap(random_corr):
    cfg = ProblemConfig(n_users=4, l_max=2).with_snr_db(10.0)
    alpha = np.full((4, 1, 1), 0.8)
    alpha[1] = 0.95
    p = np.full((4, 1, 1), 2.5)
    rounded = round_schedule(alpha, p, random_corr, cfg)
    assert rounded.alpha_bin.sum() == 2
    assert rounded.alpha_bin[1, 0, 0] == 1.0  # largest relaxed value survives


def test_afw_iterates_feasible_and_improving(random_corr, small_config):
    state, schedule = afw_schedule(
        random_corr, small_config, n_iters=60, seed=0, early_stop=False
    )
    assert state.k == 60
    ScheduleVars(state.alpha, state.p).validate(
        small_config.l_max, small_config.p_max
    )
    trace = state.objective_trace()
    assert len(trace) == 61
    assert trace[-1] > trace[0]
    ScheduleVars(schedule.alpha_bin, schedule.p).validate(
        small_config.l_max, small_config.p_max
    )
    assert set(np.unique(schedule.alpha_bin)) <= {0.0, 1.0}


def test_afw_deterministic(random_corr, small_config):
    s1, b1 = afw_schedule(random_corr, small_config, n_iters=25, seed=3)
    s2, b2 = afw_schedule(random_corr, small_config, n_iters=25, seed=3)
    np.testing.assert_array_equal(s1.alpha, s2.alpha)
    np.testing.assert_array_equal(b1.p, b2.p)
    np.testing.assert_array_equal(s1.objective_trace(), s2.objective_trace())


def test_afw_early_stop(random_corr, small_config):
    state, _ = afw_schedule(
        random_corr,
        small_config,
        n_iters=500,
        early_stop=True,
        stop_tol=1e-3,
        stop_window=10,
    )
    assert state.k < 500
    tail = state.objective_trace()[-1]
    window = state.objective_trace()[-11]
    assert abs(tail - window) < 1e-3 * abs(tail)


def test_afw_history_schema_and_trace_csv(tmp_path, random_corr, small_config):
    state, _ = afw_schedule(random_corr, small_config, n_iters=5, early_stop=False)
    for row in state.history:
        assert set(row) == {"k", "f", "f1", "f2", "eta", "de_residual"}
        assert row["de_residual"] < 1e-10
    path = tmp_path / "trace.csv"
    write_trace_csv(state, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,f,f1,f2,eta,de_residual"
    assert len(lines) == 2 + state.k


def test_afw_single_user_budget():
    """l_max = 1 forces one stream per RBG in the rounded schedule."""
    cfg = ProblemConfig(n_users=4, l_max=1).with_snr_db(10.0)
    corr = CorrelationSet.random_psd(4, 1, 16, seed=31)
    _, schedule = afw_schedule(corr, cfg, n_iters=100, seed=0)
    assert schedule.alpha_bin.sum(axis=(0, 2)).max() <= 1
