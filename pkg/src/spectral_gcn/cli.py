"""Command-line experiment runner.

Settings come from an optional ``key = value`` config file; command-line
flags override it. Results are written as CSV to ``--out`` or stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

from . import data
from .errors import SpectralGCNError
from .experiment import (
    ARCHS,
    ExperimentConfig,
    load_problem,
    parse_key_values,
    rank_sweep,
    run_experiment,
    smoother_sweep,
    timing_report,
)
from .training import summarize

RUN_HEADER = ["run", "seed", "accuracy_pct", "setup_s", "train_s"]
SWEEP_HEADER = ["arch", "{label}", "runs", "accuracy_pct", "setup_s", "train_s"]
TIMING_HEADER = ["path", "runs", "accuracy_pct", "setup_s", "train_s", "total_s"]

# flag name -> config key
FLAGS = {
    "dataset": "dataset",
    "data_path": "data_path",
    "arch": "arch",
    "filter": "filter",
    "rank": "rank",
    "smoother": "smoother",
    "runs": "runs",
    "seed": "seed",
    "lr": "lr",
    "iters": "iters",
    "rho": "rho",
    "hidden": "hidden",
    "train_indices": "train_indices",
    "sigma": "sigma",
    "points_per_orb": "points_per_orb",
    "lambda_n": "lambda_n",
    "dense_cap": "dense_cap",
    "out": "out",
}


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="key = value file; flags override it")
    parser.add_argument("--dataset", help="spiral, cars, mushrooms or csv:<path>")
    parser.add_argument("--data-path", help="UCI data file (default: search ./data)")
    parser.add_argument("--arch", choices=ARCHS)
    parser.add_argument("--filter", help="linear, quadratic, pinv or poly:a0,a1,...")
    parser.add_argument("--rank", type=int)
    parser.add_argument("--smoother", choices=["none", "identity", "hypergraph", "combined"])
    parser.add_argument("--runs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--rho", type=float)
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--train-indices", help="1-based training nodes, one per line")
    parser.add_argument("--sigma", type=float, help="Gaussian kernel width (spiral)")
    parser.add_argument("--points-per-orb", type=int)
    parser.add_argument("--lambda-n", type=float, help="override the largest eigenvalue")
    parser.add_argument("--dense-cap", type=int)
    parser.add_argument("--out", help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-gcn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("train", help="multi-run training of one configuration"))

    p = sub.add_parser("rank-sweep", help="accuracy over a list of ranks")
    _common(p)
    p.add_argument("--ranks", default="10,12,15,20,25,30,40,50,70,100")
    p.add_argument("--archs", default="lgcn,rgcn")

    p = sub.add_parser("smoother-sweep", help="accuracy over smoother kinds")
    _common(p)
    p.add_argument("--smoothers", default="none,identity,hypergraph,combined")
    p.add_argument("--archs", help="comma-separated (default: --arch)")

    _common(sub.add_parser("timing", help="naive dense kernel against the structured one"))

    p = sub.add_parser("gen-spiral", help="write a spiral dataset as x,y,z,label")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points-per-orb", type=int, default=2000)
    p.add_argument("--out", required=True)
    return parser


def config_from_args(args) -> ExperimentConfig:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(parse_key_values(fh.read()))
    for flag, key in FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[key] = value
    if args.command == "rank-sweep" and values.get("rank") is None:
        # the sweep sets the rank per row; the largest one only validates the config
        values["rank"] = max(int(r) for r in _split(args.ranks))
    return ExperimentConfig.from_mapping(values)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def format_runs(records, base_seed: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_HEADER)
    for r in records:
        w.writerow([r.run, r.seed, _fmt(r.accuracy), _fmt(r.setup_s), _fmt(r.train_s)])
    s = summarize(records)
    w.writerow(["mean", base_seed, _fmt(s.accuracy), _fmt(s.setup_s), _fmt(s.train_s)])
    return buf.getvalue()


def format_sweep(rows, label: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([h.format(label=label) for h in SWEEP_HEADER])
    for r in rows:
        w.writerow([r.arch, r.label, r.runs, _fmt(r.accuracy), _fmt(r.setup_s), _fmt(r.train_s)])
    return buf.getvalue()


def format_timing(naive, structured) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMING_HEADER)
    for r in (naive, structured):
        w.writerow([r.path, r.runs, _fmt(r.accuracy), _fmt(r.setup_s), _fmt(r.train_s), _fmt(r.total_s)])
    w.writerow(["speedup", "", "", "", "", _fmt(naive.total_s / structured.total_s)])
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stage = "config"
    try:
        if args.command == "gen-spiral":
            stage = "generate"
            points, labels = data.generate_spiral(
                data.SpiralConfig(points_per_orb=args.points_per_orb, seed=args.seed)
            )
            data.write_spiral_csv(args.out, points, labels)
            return 0

        cfg = config_from_args(args)
        stage = "load"
        problem = load_problem(cfg)
        stage = "run"
        if args.command == "train":
            text = format_runs(run_experiment(cfg, problem), cfg.seed)
        elif args.command == "rank-sweep":
            rows = rank_sweep(cfg, [int(r) for r in _split(args.ranks)], _split(args.archs), problem)
            text = format_sweep(rows, "rank")
        elif args.command == "smoother-sweep":
            archs = _split(args.archs) if args.archs else None
            text = format_sweep(smoother_sweep(cfg, _split(args.smoothers), archs, problem), "smoother")
        else:
            naive, structured = timing_report(cfg, problem)
            text = format_timing(naive, structured)
        stage = "write"
        _emit(text, cfg.out)
        if args.command == "timing" and structured.total_s >= naive.total_s:
            print("structured path was not faster than the naive one", file=sys.stderr)
            return 3
        return 0
    except (SpectralGCNError, OSError, ValueError) as exc:
        print(f"spectral-gcn: {stage} failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
