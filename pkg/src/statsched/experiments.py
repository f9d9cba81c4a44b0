"""Experiment harness: statistics-accuracy, convergence, and benchmark runs.

Each run produces an ExperimentReport with fixed CSV columns
(experiment, sweep_name, sweep_value, metric, mean, stderr, n, seed) plus
metadata comments sufficient to reproduce any single row.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .afw import afw_schedule
from .baselines import exhaustive_search, greedy_select, sus_schedule, evaluate_per_tti
from .channel import CorrelationSet
from .config import ProblemConfig
from .det_equiv import de_rate, de_sinr_zf, relative_error, solve_bar_e
from .link import ScheduleVars, ergodic_rate_mc

CSV_COLUMNS = ["experiment", "sweep_name", "sweep_value", "metric", "mean", "stderr", "n", "seed"]

LN2 = float(np.log(2.0))


@dataclass
class ExperimentSpec:
    kind: str  # de_accuracy | convergence | benchmark
    config: ProblemConfig
    sweep_name: str
    sweep_values: list
    trials: int = 1
    seed: int = 0
    output_path: str = None
    channel: str = "rayleigh"  # or "random"
    mc_realizations: int = 1000
    n_iters: int = 300
    ttis: int = 200
    sus_epsilon: float = 0.4
    workers: int = 1

    def __post_init__(self):
        if not self.sweep_values:
            raise ValueError("sweep must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class ExperimentReport:
    rows: list
    metadata: dict = field(default_factory=dict)

    def write_csv(self, path_or_file, bits: bool = False) -> None:
        if hasattr(path_or_file, "write"):
            self._write_csv(path_or_file, bits)
        else:
            with open(path_or_file, "w", newline="") as f:
                self._write_csv(f, bits)

    def _write_csv(self, f, bits: bool) -> None:
        for key, val in sorted(self.metadata.items()):
            f.write(f"# {key}={json.dumps(val)}\n")
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in self.rows:
            out = dict(row)
            if bits and "rate" in out["metric"]:
                out["mean"] /= LN2
                out["stderr"] /= LN2
            writer.writerow(out)

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump({"metadata": self.metadata, "rows": self.rows}, f, indent=2)


def draw_correlation(kind: str, config: ProblemConfig, seed) -> CorrelationSet:
    if kind == "rayleigh":
        return CorrelationSet.identity(config.n_users, config.n_streams, config.n_t)
    if kind == "random":
        return CorrelationSet.random_psd(
            config.n_users, config.n_streams, config.n_t, seed
        )
    raise ValueError(f"unknown channel kind {kind!r}")


def full_activation(config: ProblemConfig) -> ScheduleVars:
    """Binary schedule activating the first l_max streams per RBG, equal power."""
    i_, n_, l_ = config.n_users, config.n_rbgs, config.n_streams
    alpha = np.zeros((i_, n_, l_))
    for n in range(n_):
        flat = np.zeros(i_ * l_)
        flat[: config.l_max] = 1.0
        alpha[:, n, :] = flat.reshape(i_, l_)
    p = np.where(alpha > 0, config.p_max / alpha.sum(), 0.0)
    return ScheduleVars(alpha, p)


def _map(fn, items, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _mean_row(spec, sweep_value, metric, values):
    values = np.asarray(values, dtype=float)
    stderr = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return {
        "experiment": spec.kind,
        "sweep_name": spec.sweep_name,
        "sweep_value": sweep_value,
        "metric": metric,
        "mean": float(values.mean()),
        "stderr": stderr,
        "n": len(values),
        "seed": spec.seed,
    }


def _metadata(spec: ExperimentSpec) -> dict:
    return {
        "version": __version__,
        "kind": spec.kind,
        "config": spec.config.to_dict(),
        "sweep_name": spec.sweep_name,
        "sweep_values": list(spec.sweep_values),
        "trials": spec.trials,
        "seed": spec.seed,
        "channel": spec.channel,
        "mc_realizations": spec.mc_realizations,
        "n_iters": spec.n_iters,
        "ttis": spec.ttis,
        "sus_epsilon": spec.sus_epsilon,
        "snr_definition": "p_max / sigma_sq in dB, p_max fixed",
        "rate_unit": "nats/channel-use unless converted with --bits",
    }


def _sweep_config(spec: ExperimentSpec, value) -> ProblemConfig:
    if spec.sweep_name == "n_t":
        return replace(spec.config, n_t=int(value))
    if spec.sweep_name == "snr_db":
        return spec.config.with_snr_db(float(value))
    if spec.sweep_name == "w":
        return replace(spec.config, w=float(value))
    raise ValueError(f"unknown sweep axis {spec.sweep_name!r}")


def _de_accuracy_trial(args):
    spec, value, sweep_index, trial = args
    cfg = _sweep_config(spec, value)
    seed = np.random.SeedSequence([spec.seed, sweep_index, trial])
    corr = draw_correlation(spec.channel, cfg, seed)
    sched = full_activation(cfg)
    sol = solve_bar_e(corr, sched.alpha)
    gamma_bar = de_sinr_zf(sol, sched, cfg.sigma_sq, cfg.n_t)
    _, de_sum = de_rate(gamma_bar, cfg.mu)
    mc_rates, _ = ergodic_rate_mc(
        corr, sched, cfg.delta, cfg.sigma_sq, spec.mc_realizations, seed.spawn(1)[0]
    )
    mc_sum = float(cfg.mu @ mc_rates)
    eps = relative_error(mc_sum, de_sum)
    return {"rel_error": eps, "abs_rel_error": abs(eps), "mc_sum_rate": mc_sum, "de_sum_rate": de_sum}


def run_de_accuracy(spec: ExperimentSpec) -> ExperimentReport:
    """DE-vs-Monte-Carlo accuracy sweep over antenna count or SNR."""
    if spec.kind != "de_accuracy":
        raise ValueError("spec.kind must be 'de_accuracy'")
    rows = []
    for idx, value in enumerate(spec.sweep_values):
        results = _map(
            _de_accuracy_trial,
            [(spec, value, idx, t) for t in range(spec.trials)],
            spec.workers,
        )
        for metric in ("abs_rel_error", "rel_error", "mc_sum_rate", "de_sum_rate"):
            rows.append(_mean_row(spec, value, metric, [r[metric] for r in results]))
    return ExperimentReport(rows=rows, metadata=_metadata(spec))


def _convergence_trial(args):
    spec, value, trial = args
    cfg = _sweep_config(spec, value)
    seed = np.random.SeedSequence([spec.seed, trial])
    corr = draw_correlation(spec.channel, cfg, seed)
    state, _ = afw_schedule(corr, cfg, n_iters=spec.n_iters, early_stop=False)
    return state.objective_trace()


def run_convergence(spec: ExperimentSpec) -> ExperimentReport:
    """Objective-vs-iteration traces averaged over statistics draws."""
    if spec.kind != "convergence":
        raise ValueError("spec.kind must be 'convergence'")
    rows = []
    for value in spec.sweep_values:
        traces = np.array(
            _map(
                _convergence_trial,
                [(spec, value, t) for t in range(spec.trials)],
                spec.workers,
            )
        )  # (trials, n_iters + 1)
        for k in range(traces.shape[1]):
            rows.append(
                _mean_row(spec, value, f"objective_iter_{k:05d}", traces[:, k])
            )
    return ExperimentReport(rows=rows, metadata=_metadata(spec))


def _benchmark_trial(args):
    spec, value, trial = args
    cfg = _sweep_config(spec, value)
    seed = np.random.SeedSequence([spec.seed, trial])
    corr = draw_correlation(spec.channel, cfg, seed)
    _, rounded = afw_schedule(corr, cfg, n_iters=spec.n_iters)
    out = {"afw_de_sum_rate": float(cfg.mu @ rounded.achieved_rates)}
    exh = exhaustive_search(corr, cfg)
    out["exhaustive_de_sum_rate"] = exh.sum_rate
    greedy = greedy_select(corr, cfg)
    out["greedy_de_sum_rate"] = greedy.sum_rate
    tti_seed = np.random.SeedSequence([spec.seed, trial, 7])
    out["afw_mc_sum_rate"], _ = evaluate_per_tti(
        lambda real: rounded, corr, cfg, spec.ttis, tti_seed
    )
    out["sus_mc_sum_rate"], _ = evaluate_per_tti(
        lambda real: sus_schedule(real, cfg, spec.sus_epsilon),
        corr,
        cfg,
        spec.ttis,
        tti_seed,
    )
    return out


def run_benchmark(spec: ExperimentSpec) -> ExperimentReport:
    """Sum-rate comparison of the scheduler against its baselines over SNR."""
    if spec.kind != "benchmark":
        raise ValueError("spec.kind must be 'benchmark'")
    rows = []
    metrics = [
        "afw_de_sum_rate",
        "exhaustive_de_sum_rate",
        "greedy_de_sum_rate",
        "afw_mc_sum_rate",
        "sus_mc_sum_rate",
    ]
    for value in spec.sweep_values:
        results = _map(
            _benchmark_trial,
            [(spec, value, t) for t in range(spec.trials)],
            spec.workers,
        )
        for metric in metrics:
            rows.append(_mean_row(spec, value, metric, [r[metric] for r in results]))
    return ExperimentReport(rows=rows, metadata=_metadata(spec))


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    runner = {
        "de_accuracy": run_de_accuracy,
        "convergence": run_convergence,
        "benchmark": run_benchmark,
    }.get(spec.kind)
    if runner is None:
        raise ValueError(f"unknown experiment kind {spec.kind!r}")
    return runner(spec)
