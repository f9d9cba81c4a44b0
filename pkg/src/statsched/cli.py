"""Command-line front end for the experiment harness and one-shot scheduling."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .afw import afw_schedule, write_trace_csv
from .channel import load_correlation_set
from .config import ProblemConfig
from .experiments import CSV_COLUMNS, ExperimentSpec, run_experiment


def _load_config(path) -> ProblemConfig:
    if path is None:
        return ProblemConfig()
    with open(path) as f:
        return ProblemConfig.from_dict(json.load(f))


def _float_list(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str):
    return [int(x) for x in text.split(",") if x.strip()]


def _add_common(parser):
    parser.add_argument("--config", default=None, help="JSON problem config")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--out", default=None, help="output CSV path")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument(
        "--bits", action="store_true", help="emit rates in bits instead of nats"
    )
    parser.add_argument("--channel", choices=["rayleigh", "random"], default="rayleigh")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statsched",
        description="Statistical-CSI multi-user scheduling experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("de-accuracy", help="DE vs Monte-Carlo accuracy sweep")
    _add_common(p)
    p.add_argument("--antennas", default="16,32,64,128", help="n_t sweep values")
    p.add_argument("--snr", default=None, help="sweep SNR (dB) instead of antennas")
    p.add_argument("--mc", type=int, default=1000, help="MC realizations per point")

    p = sub.add_parser("converge", help="objective-vs-iteration traces")
    _add_common(p)
    p.add_argument("--penalties", default="0,10,20", help="penalty coefficient sweep")
    p.add_argument("--iters", type=int, default=300)

    p = sub.add_parser("benchmark", help="sum rate vs SNR against baselines")
    _add_common(p)
    p.add_argument("--snr", default="0,5,10,15,20")
    p.add_argument("--ttis", type=int, default=200)
    p.add_argument("--epsilon", type=float, default=0.4, help="SUS orthogonality cone")
    p.add_argument("--iters", type=int, default=300)

    p = sub.add_parser("schedule", help="one-shot scheduling of a correlation file")
    p.add_argument("corr_file", help="correlation set in the binary record format")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--out", default=None, help="schedule JSON path")
    p.add_argument("--trace", default=None, help="convergence trace CSV path")
    p.add_argument("--bits", action="store_true")
    return parser


def _emit_error_row(exc: Exception, command: str, out_path):
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update({"experiment": command, "metric": "error", "mean": repr(exc)})
    writer = csv.DictWriter(sys.stderr, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    writer.writerow(row)
    if out_path:
        with open(out_path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerow(row)


def _run_schedule(args) -> int:
    config = _load_config(args.config)
    corr = load_correlation_set(args.corr_file)
    if (corr.n_users, corr.n_streams, corr.n_t) != (
        config.n_users,
        config.n_streams,
        config.n_t,
    ):
        raise ValueError("correlation file dimensions do not match config")
    state, schedule = afw_schedule(corr, config, n_iters=args.iters, seed=args.seed)
    rates = schedule.achieved_rates / (np.log(2.0) if args.bits else 1.0)
    payload = {
        "alpha": schedule.alpha_bin.astype(int).tolist(),
        "p": schedule.p.tolist(),
        "rate_per_user": rates.tolist(),
        "rate_unit": "bits" if args.bits else "nats",
        "iterations": state.k,
        "objective": state.history[-1]["f"],
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    if args.trace:
        write_trace_csv(state, args.trace)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "schedule":
            return _run_schedule(args)
        config = _load_config(args.config)
        if args.command == "de-accuracy":
            if args.snr is not None:
                sweep_name, values = "snr_db", _float_list(args.snr)
            else:
                sweep_name, values = "n_t", _int_list(args.antennas)
            spec = ExperimentSpec(
                kind="de_accuracy",
                config=config,
                sweep_name=sweep_name,
                sweep_values=values,
                trials=args.trials,
                seed=args.seed,
                channel=args.channel,
                mc_realizations=args.mc,
                workers=args.workers,
            )
        elif args.command == "converge":
            spec = ExperimentSpec(
                kind="convergence",
                config=config,
                sweep_name="w",
                sweep_values=_float_list(args.penalties),
                trials=args.trials,
                seed=args.seed,
                channel=args.channel,
                n_iters=args.iters,
                workers=args.workers,
            )
        else:
            spec = ExperimentSpec(
                kind="benchmark",
                config=config,
                sweep_name="snr_db",
                sweep_values=_float_list(args.snr),
                trials=args.trials,
                seed=args.seed,
                channel=args.channel,
                n_iters=args.iters,
                ttis=args.ttis,
                sus_epsilon=args.epsilon,
                workers=args.workers,
            )
        report = run_experiment(spec)
        report.write_csv(args.out if args.out else sys.stdout, bits=args.bits)
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _emit_error_row(exc, args.command, getattr(args, "out", None))
        return 1


if __name__ == "__main__":
    sys.exit(main())
