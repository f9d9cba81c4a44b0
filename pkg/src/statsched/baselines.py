"""Reference schedulers: exhaustive search, greedy growth, and SUS.

Exhaustive and greedy work on statistics (DE objective, equal power split);
SUS is the classical instantaneous-CSI scheduler and is meant to be re-run
every TTI.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, CorrelationSet, sample_effective_channels
from .config import ProblemConfig
from .det_equiv import de_rate, de_sinr_zf, solve_bar_e
from .link import ScheduleVars, instantaneous_sinr
from .afw import BinarySchedule

EXHAUSTIVE_GUARD = 20


@dataclass
class BaselineResult:
    method: str
    schedule: BinarySchedule
    sum_rate: float
    objective: float
    evaluations: int


def _binary_schedule(alpha_bin: np.ndarray, config: ProblemConfig, corr):
    """Equal power split over active streams; recompute DE rates."""
    size = int(alpha_bin.sum())
    p = np.where(alpha_bin > 0, config.p_max / size if size else 0.0, 0.0)
    sol = solve_bar_e(corr, alpha_bin)
    sched = ScheduleVars(alpha_bin, p)
    gamma_bar = de_sinr_zf(sol, sched, config.sigma_sq, config.n_t)
    rates, weighted = de_rate(gamma_bar, config.mu)
    return BinarySchedule(alpha_bin=alpha_bin, p=p, achieved_rates=rates), weighted


def _de_objective(rates: np.ndarray, config: ProblemConfig) -> float:
    from .objective import sigmoid_bonus

    f2, _ = sigmoid_bonus(rates, config)
    return float(config.mu @ rates) + f2


def exhaustive_search(corr: CorrelationSet, config: ProblemConfig) -> BaselineResult:
    """Enumerate every binary activation obeying the per-RBG cap.

    Supports are visited in order of increasing size and replaced only on
    strict improvement, so ties resolve toward fewer active streams.
    """
    i_, n_, l_ = config.n_users, config.n_rbgs, config.n_streams
    if i_ * n_ * l_ > EXHAUSTIVE_GUARD:
        raise ValueError(
            f"instance has {i_ * n_ * l_} binary coordinates, exhaustive "
            f"guard is {EXHAUSTIVE_GUARD}"
        )
    per_rbg = [
        subset
        for size in range(config.l_max + 1)
        for subset in itertools.combinations(range(i_ * l_), size)
    ]
    best = None
    evaluations = 0
    combos = sorted(
        itertools.product(per_rbg, repeat=n_),
        key=lambda c: sum(len(s) for s in c),
    )
    for combo in combos:
        alpha = np.zeros((i_, n_, l_))
        for n, subset in enumerate(combo):
            flat = np.zeros(i_ * l_)
            flat[list(subset)] = 1.0
            alpha[:, n, :] = flat.reshape(i_, l_)
        schedule, weighted = _binary_schedule(alpha, config, corr)
        f = _de_objective(schedule.achieved_rates, config)
        evaluations += 1
        if best is None or f > best[0]:
            best = (f, weighted, schedule)
    f, weighted, schedule = best
    return BaselineResult(
        method="exhaustive",
        schedule=schedule,
        sum_rate=weighted,
        objective=f,
        evaluations=evaluations,
    )


def greedy_select(corr: CorrelationSet, config: ProblemConfig) -> BaselineResult:
    """Grow the schedule one stream at a time while the objective improves."""
    i_, n_, l_ = config.n_users, config.n_rbgs, config.n_streams
    alpha = np.zeros((i_, n_, l_))
    schedule, weighted = _binary_schedule(alpha, config, corr)
    best_f = _de_objective(schedule.achieved_rates, config)
    evaluations = 1
    while True:
        per_rbg = alpha.sum(axis=(0, 2))
        best_step = None
        for i, n, l in itertools.product(range(i_), range(n_), range(l_)):
            if alpha[i, n, l] > 0 or per_rbg[n] >= config.l_max:
                continue
            trial = alpha.copy()
            trial[i, n, l] = 1.0
            sched_t, weighted_t = _binary_schedule(trial, config, corr)
            f_t = _de_objective(sched_t.achieved_rates, config)
            evaluations += 1
            if f_t > best_f and (best_step is None or f_t > best_step[0]):
                best_step = (f_t, weighted_t, sched_t, trial)
        if best_step is None:
            break
        best_f, weighted, schedule, alpha = best_step
    return BaselineResult(
        method="greedy",
        schedule=schedule,
        sum_rate=weighted,
        objective=best_f,
        evaluations=evaluations,
    )


def sus_schedule(
    channels: ChannelRealization,
    config: ProblemConfig,
    epsilon: float = 0.4,
) -> BinarySchedule:
    """Semi-orthogonal stream selection on instantaneous channels.

    Per RBG: repeatedly pick the candidate with the largest component
    orthogonal to the span of already selected channels, then drop
    candidates whose normalized projection onto that span reaches epsilon.
    Power is split equally over everything selected; rates are evaluated
    with the near-zero-regularization RZF link.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    i_, n_, l_, _ = channels.h.shape
    alpha = np.zeros((i_, n_, l_))
    for n in range(n_):
        h_flat = channels.h[:, n, :, :].reshape(i_ * l_, -1)
        candidates = list(range(i_ * l_))
        basis = []
        selected = []
        while candidates and len(selected) < config.l_max:
            best_a, best_norm = None, -1.0
            for a in candidates:
                g = h_flat[a].copy()
                for b in basis:
                    g -= (np.conj(b) @ g) * b
                norm = np.linalg.norm(g)
                if norm > best_norm + 1e-15:
                    best_a, best_norm, best_g = a, norm, g
            selected.append(best_a)
            candidates.remove(best_a)
            if best_norm > 0:
                basis.append(best_g / best_norm)
            survivors = []
            for a in candidates:
                proj = h_flat[a].copy()
                for b in basis:
                    proj -= (np.conj(b) @ proj) * b
                h_norm = np.linalg.norm(h_flat[a])
                frac = (
                    np.sqrt(max(h_norm**2 - np.linalg.norm(proj) ** 2, 0.0)) / h_norm
                    if h_norm > 0
                    else 1.0
                )
                if frac < epsilon:
                    survivors.append(a)
            candidates = survivors
        flat = np.zeros(i_ * l_)
        flat[selected] = 1.0
        alpha[:, n, :] = flat.reshape(i_, l_)
    size = int(alpha.sum())
    p = np.where(alpha > 0, config.p_max / size if size else 0.0, 0.0)
    metrics = instantaneous_sinr(
        channels, ScheduleVars(alpha, p), config.delta, config.sigma_sq
    )
    return BinarySchedule(alpha_bin=alpha, p=p, achieved_rates=metrics.rate_per_user)


def evaluate_per_tti(
    scheduler,
    corr: CorrelationSet,
    config: ProblemConfig,
    ttis: int,
    seed,
):
    """Average instantaneous weighted sum rate of a per-TTI scheduler.

    ``scheduler`` maps a ChannelRealization to a BinarySchedule; it is
    invoked on a fresh channel draw every TTI. Returns (mean, std_error).
    """
    if ttis < 1:
        raise ValueError("ttis must be >= 1")
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    child_seeds = seed.spawn(ttis)
    rates = np.empty(ttis)
    for t in range(ttis):
        real = sample_effective_channels(corr, config.n_rbgs, child_seeds[t])
        schedule = scheduler(real)
        metrics = instantaneous_sinr(
            real,
            ScheduleVars(schedule.alpha_bin, schedule.p),
            config.delta,
            config.sigma_sq,
            mu=config.mu,
        )
        rates[t] = metrics.sum_rate
    mean = float(rates.mean())
    stderr = float(rates.std(ddof=1) / np.sqrt(ttis)) if ttis > 1 else 0.0
    return mean, stderr
