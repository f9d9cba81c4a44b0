"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Criterion 7's first clause (statistics-only scheduler beating the
instantaneous-CSI SUS baseline on raw sum rate at SNR 10 dB under the
default activation reward) is structurally unattainable and fails honestly;
see the assertion message in test_criterion_7 for the analysis.
"""

import itertools
import time

import numpy as np
import pytest

from statsched import (
    BinarySchedule,
    CorrelationSet,
    ExperimentSpec,
    ProblemConfig,
    RawChannelSample,
    ScheduleVars,
    afw_schedule,
    de_rate,
    de_sinr_zf,
    estimate_correlation,
    evaluate_per_tti,
    exhaustive_search,
    grad_alpha,
    grad_p,
    greedy_select,
    lmo_alpha,
    lmo_p,
    objective,
    sigmoid_bonus,
    solve_bar_e,
    solve_de_rzf,
    sus_schedule,
)
from statsched.channel import make_rng
from statsched.experiments import run_convergence, run_de_accuracy


def _report(num, ok, detail, budget_s, elapsed):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num}: {status} ({detail}; {elapsed:.1f}s of {budget_s}s budget)")


def _vc_config(**overrides):
    """Small benchmark instance: 16 antennas, 4 single-stream users."""
    base = dict(
        n_t=16,
        n_users=4,
        n_rbgs=1,
        n_streams=1,
        l_max=4,
        w=20.0,
        theta=5.0,
        r_exp=2.0,
        r_min=5.0,
    )
    base.update(overrides)
    return ProblemConfig(**base)


def test_criterion_1_closed_form_fixed_point():
    """Identity correlation, 4 of 16 active: bar_e = 0.75, SINR = 12."""
    t0 = time.monotonic()
    corr = CorrelationSet.identity(4, 1, 16)
    alpha = np.ones((4, 1, 1))
    sol = solve_bar_e(corr, alpha)
    sched = ScheduleVars(alpha, np.ones((4, 1, 1)))
    gamma = de_sinr_zf(sol, sched, 1.0, 16)
    elapsed = time.monotonic() - t0
    ok = (
        np.all(np.abs(sol.bar_e - 0.75) <= 1e-10)
        and np.all(np.abs(gamma - 12.0) <= 1e-8)
        and elapsed < 1.0
    )
    _report(1, ok, f"bar_e={sol.bar_e.ravel()[0]:.12f}, gamma={gamma.ravel()[0]:.10f}", 1, elapsed)
    np.testing.assert_allclose(sol.bar_e, 0.75, atol=1e-10)
    np.testing.assert_allclose(gamma, 12.0, atol=1e-8)
    assert elapsed < 1.0


def test_criterion_2_de_accuracy_trend():
    """Mean |eps| strictly decreasing in n_t; < 5% at n_t = 64."""
    t0 = time.monotonic()
    cfg = _vc_config().with_snr_db(10.0)
    spec = ExperimentSpec(
        kind="de_accuracy",
        config=cfg,
        sweep_name="n_t",
        sweep_values=[16, 32, 64, 128],
        trials=10,
        seed=42,
        channel="rayleigh",
        mc_realizations=1000,
    )
    report = run_de_accuracy(spec)
    eps = {
        row["sweep_value"]: row["mean"]
        for row in report.rows
        if row["metric"] == "abs_rel_error"
    }
    series = [eps[n] for n in (16, 32, 64, 128)]
    elapsed = time.monotonic() - t0
    decreasing = all(a > b for a, b in zip(series, series[1:]))
    ok = decreasing and eps[64] < 0.05 and elapsed < 300
    _report(2, ok, "mean|eps|=" + ", ".join(f"{e:.4%}" for e in series), 300, elapsed)
    assert decreasing, f"|eps| not strictly decreasing: {series}"
    assert eps[64] < 0.05
    assert elapsed < 300


def test_criterion_3_finite_vs_zero_regularization():
    """Finite-regularization DE matches the ZF limit on 20 random instances."""
    t0 = time.monotonic()
    worst = 0.0
    for k in range(20):
        cfg = _vc_config().with_snr_db(10.0)
        corr = CorrelationSet.random_psd(4, 1, 16, np.random.SeedSequence([3, k]))
        sched = ScheduleVars(np.ones((4, 1, 1)), np.full((4, 1, 1), 2.5))
        zf = solve_bar_e(corr, sched.alpha)
        gamma_zf = de_sinr_zf(zf, sched, cfg.sigma_sq, cfg.n_t)
        rzf = solve_de_rzf(corr, sched, cfg.delta, cfg.sigma_sq)
        worst = max(worst, float(np.abs(rzf.gamma_bar / gamma_zf - 1.0).max()))
    elapsed = time.monotonic() - t0
    ok = worst < 1e-3 and elapsed < 60
    _report(3, ok, f"worst relative gap {worst:.2e}", 60, elapsed)
    assert worst < 1e-3
    assert elapsed < 60


def test_criterion_4_implicit_gradient_oracle():
    """grad_alpha/grad_p vs central finite differences through the DE solve."""
    t0 = time.monotonic()
    worst = 0.0
    h = 1e-6
    for k in range(10):
        cfg = ProblemConfig(
            n_t=16,
            n_users=4,
            n_rbgs=2,
            n_streams=1,
            l_max=3,
            theta=5.0,
            r_exp=2.0,
            r_min=2.0,
            w=10.0,
        ).with_snr_db(10.0)
        corr = CorrelationSet.random_psd(4, 1, 16, np.random.SeedSequence([4, k]))
        rng = make_rng(k)
        shape = (4, 2, 1)
        sched = ScheduleVars(
            rng.uniform(0.2, 0.9, shape), rng.uniform(0.1, 1.0, shape)
        )
        for which, grad in (("alpha", grad_alpha), ("p", grad_p)):
            g = grad(sched, corr, cfg)
            it = np.nditer(g, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                hi_a, hi_p = sched.alpha.copy(), sched.p.copy()
                lo_a, lo_p = sched.alpha.copy(), sched.p.copy()
                (hi_a if which == "alpha" else hi_p)[idx] += h
                (lo_a if which == "alpha" else lo_p)[idx] -= h
                fd = (
                    objective(ScheduleVars(hi_a, hi_p), corr, cfg).f
                    - objective(ScheduleVars(lo_a, lo_p), corr, cfg).f
                ) / (2 * h)
                if abs(g[idx]) > 1e-8:
                    worst = max(worst, abs(fd / g[idx] - 1.0))
    elapsed = time.monotonic() - t0
    ok = worst < 1e-4 and elapsed < 120
    _report(4, ok, f"worst FD mismatch {worst:.2e}", 120, elapsed)
    assert worst < 1e-4
    assert elapsed < 120


def test_criterion_5_convergence_speed():
    """Averaged objective within 1% of its iteration-500 value by iteration 100."""
    t0 = time.monotonic()
    cfg = _vc_config().with_snr_db(10.0)
    spec = ExperimentSpec(
        kind="convergence",
        config=cfg,
        sweep_name="w",
        sweep_values=[0.0, 10.0, 20.0],
        trials=100,
        seed=7,
        channel="random",
        n_iters=500,
    )
    report = run_convergence(spec)
    traces = {}
    for row in report.rows:
        k = int(row["metric"].rsplit("_", 1)[1])
        traces.setdefault(row["sweep_value"], {})[k] = row["mean"]
    details = []
    ok_all = True
    for w, trace in sorted(traces.items()):
        final = trace[500]
        gap = max(
            abs(trace[k] - final) / abs(final) for k in range(100, 501)
        )
        details.append(f"w={w:g}: max gap past iter 100 = {gap:.3%}")
        ok_all &= gap < 0.01
    elapsed = time.monotonic() - t0
    ok = ok_all and elapsed < 600
    _report(5, ok, "; ".join(details), 600, elapsed)
    assert ok_all, details
    assert elapsed < 600


def test_criterion_6_near_optimality():
    """Rounded AFW DE sum rate >= 95% of exhaustive search across SNR."""
    t0 = time.monotonic()
    details = []
    ok_all = True
    for snr in (0.0, 5.0, 10.0, 15.0, 20.0):
        cfg = _vc_config().with_snr_db(snr)
        ratios = []
        for d in range(50):
            corr = CorrelationSet.random_psd(
                4, 1, 16, np.random.SeedSequence([6, int(snr), d])
            )
            _, schedule = afw_schedule(corr, cfg, n_iters=300, seed=d)
            ex = exhaustive_search(corr, cfg)
            afw_rate = float(cfg.mu @ schedule.achieved_rates)
            ratios.append(afw_rate / ex.sum_rate if ex.sum_rate > 0 else 1.0)
        mean_ratio = float(np.mean(ratios))
        details.append(f"{snr:g}dB: {mean_ratio:.3f}")
        ok_all &= mean_ratio >= 0.95
    elapsed = time.monotonic() - t0
    ok = ok_all and elapsed < 900
    _report(6, ok, "mean AFW/exhaustive ratio " + ", ".join(details), 900, elapsed)
    assert ok_all, details
    assert elapsed < 900


def test_criterion_7_baseline_ordering():
    """AFW vs SUS mean sum rate at SNR 10 dB; exhaustive >= greedy everywhere.

    HONEST RED (first clause): with the default activation reward (w=20,
    per-user floor 5 nats) no multi-user power split reaches the floor at
    SNR 10 dB (full activation gives log(1+30) = 3.43 nats/user), so the
    penalized objective's true optimum activates a single user - exhaustive
    search picks the same schedule, confirming the optimizer. A per-TTI
    instantaneous-CSI scheduler (SUS) necessarily beats any statistics-only
    single-user schedule on raw sum rate when all users share identical
    statistics. The ordering holds for the objective the optimizer actually
    maximizes (15.45 vs <= 13.77) and for raw sum rate once the activation
    reward is off (w=0: 13.82 +/- 0.08 vs 11.82 +/- 0.21).
    """
    t0 = time.monotonic()
    cfg = _vc_config().with_snr_db(10.0)
    corr = CorrelationSet.identity(4, 1, 16)

    # exhaustive >= greedy at every SNR point (second clause)
    greedy_ok = True
    for snr in (0.0, 5.0, 10.0, 15.0, 20.0):
        c = _vc_config().with_snr_db(snr)
        for d in range(10):
            rcorr = CorrelationSet.random_psd(
                4, 1, 16, np.random.SeedSequence([7, int(snr), d])
            )
            ex = exhaustive_search(rcorr, c)
            gr = greedy_select(rcorr, c)
            greedy_ok &= ex.objective >= gr.objective - 1e-9

    _, schedule = afw_schedule(corr, cfg, n_iters=300, seed=0)
    afw_mean, afw_se = evaluate_per_tti(
        lambda real: BinarySchedule(
            schedule.alpha_bin, schedule.p, schedule.achieved_rates
        ),
        corr,
        cfg,
        200,
        np.random.SeedSequence([11, 0]),
    )
    sus_mean, sus_se = evaluate_per_tti(
        lambda real: sus_schedule(real, cfg, 0.4),
        corr,
        cfg,
        200,
        np.random.SeedSequence([11, 0]),
    )
    afw_lo = afw_mean - 1.96 * afw_se
    sus_hi = sus_mean + 1.96 * sus_se
    first_clause = afw_mean > sus_mean and afw_lo > sus_hi
    elapsed = time.monotonic() - t0
    ok = first_clause and greedy_ok and elapsed < 600
    _report(
        7,
        ok,
        f"AFW {afw_mean:.3f}±{1.96 * afw_se:.3f} vs SUS "
        f"{sus_mean:.3f}±{1.96 * sus_se:.3f}; exhaustive>=greedy: {greedy_ok}",
        600,
        elapsed,
    )
    assert greedy_ok, "exhaustive < greedy somewhere"
    assert elapsed < 600
    assert first_clause, (
        "structural failure, not a bug: the penalized objective's optimum at "
        "SNR 10 dB activates one user (per-user rate floor 5 nats is "
        f"unreachable under any multi-user split), so AFW {afw_mean:.3f} < "
        f"SUS {sus_mean:.3f} on raw sum rate; exhaustive search selects the "
        "same single-user schedule and the ordering holds on the optimized "
        "objective (15.45 vs <= 13.77) and on sum rate when the activation "
        "reward is off (w=0: 13.82 vs 11.82)"
    )


def test_criterion_8_invariant_suites():
    """Feasibility, LMO-vs-enumeration, estimator closure, sigmoid slope."""
    t0 = time.monotonic()
    # every AFW iterate feasible (validated inside the loop; re-check trace)
    cfg = _vc_config().with_snr_db(10.0)
    corr = CorrelationSet.random_psd(4, 1, 16, np.random.SeedSequence(8))
    state, schedule = afw_schedule(corr, cfg, n_iters=40, seed=0, early_stop=False)
    ScheduleVars(state.alpha, state.p).validate(cfg.l_max, cfg.p_max)
    ScheduleVars(schedule.alpha_bin, schedule.p).validate(cfg.l_max, cfg.p_max)

    # LMO equals brute-force vertex enumeration for I*L <= 12
    rng = make_rng(88)
    for _ in range(30):
        score = rng.normal(size=(4, 1, 3))
        l_max = int(rng.integers(1, 7))
        vertex = lmo_alpha(score, l_max)
        flat = score.reshape(-1)
        best = -np.inf
        for size in range(min(l_max, 12) + 1):
            for combo in itertools.combinations(range(12), size):
                best = max(best, flat[list(combo)].sum())
        assert abs(float((vertex * score).sum()) - best) < 1e-12
        pv = lmo_p(score, 10.0)
        assert abs(float((pv * score).sum()) - max(0.0, flat.max() * 10.0)) < 1e-12

    # Hermitian-PSD closure of the correlation estimator
    raw = [
        RawChannelSample(
            rng.standard_normal((3, 2, 4, 8)) + 1j * rng.standard_normal((3, 2, 4, 8))
        )
        for _ in range(3)
    ]
    est = estimate_correlation(raw, 2)  # constructor enforces Hermitian PSD
    assert est.r.shape == (3, 2, 8, 8)

    # sigmoid slope matches finite differences to 1e-6 relative
    scfg = ProblemConfig(n_users=1, l_max=1, w=1.0, theta=5.0, r_min=5.0)
    h = 1e-5
    worst = 0.0
    for rate in (4.0, 4.5, 5.0, 5.5, 6.0):
        f_hi, _ = sigmoid_bonus(np.array([rate + h]), scfg)
        f_lo, _ = sigmoid_bonus(np.array([rate - h]), scfg)
        _, m = sigmoid_bonus(np.array([rate]), scfg)
        worst = max(worst, abs((f_hi - f_lo) / (2 * h) / m[0] - 1.0))
    elapsed = time.monotonic() - t0
    ok = worst < 1e-6 and elapsed < 60
    _report(8, ok, f"sigmoid FD mismatch {worst:.2e}", 60, elapsed)
    assert worst < 1e-6
    assert elapsed < 60
