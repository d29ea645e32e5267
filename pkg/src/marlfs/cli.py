"""Command-line entry point: ``marlfs run | generate | rank``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .dataset import DatasetError, make_synthetic, write_csv
from .experiment import RunConfig, means_from_rows, read_results, run_experiment, score_rank, write_rank_table


def _parse_indices(text: str) -> list[int]:
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def cmd_run(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 2
    raw = yaml.safe_load(path.read_text()) or {}
    if not isinstance(raw, dict):
        print("error: config must be a mapping", file=sys.stderr)
        return 2
    out = args.out or raw.pop("out", None) or "results"
    raw.pop("out", None)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    try:
        cfg = RunConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_experiment(cfg, out)
    except (DatasetError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest['artifacts'])} artifacts to {out}")
    return 0


def cmd_generate(args) -> int:
    try:
        informative = _parse_indices(args.informative)
        d = make_synthetic(args.f, args.m, informative, args.noise, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sidecar = {"informative": d.provenance["informative"], "seed": args.seed, "noise": args.noise,
               "f": args.f, "m": args.m, "label_column": "label"}
    try:
        write_csv(d, args.out, sidecar=sidecar)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({args.f} features, {args.m} rows)")
    return 0


def cmd_rank(args) -> int:
    tables = [means_from_rows(read_results(p)) for p in args.results]
    try:
        ranks = score_rank(tables)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_rank_table(ranks, out)
    for m, v in ranks.items():
        print(f"{m:12s} features {v['features_score']:4d} ({v['features_rank']})  "
              f"performance {v['performance_score']:4d} ({v['performance_rank']})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marlfs", description="Multiagent feature selection experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides config 'out')")
    run.add_argument("--seed", type=int, help="master seed (overrides config)")
    run.add_argument("--workers", type=int, help="parallel jobs")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("generate", help="write a planted-feature synthetic dataset")
    gen.add_argument("--f", type=int, default=200, help="number of features")
    gen.add_argument("--m", type=int, default=100, help="number of rows")
    gen.add_argument("--informative", default="0-4", help="indices, e.g. '0-4' or '1,5,9'")
    gen.add_argument("--noise", type=float, default=0.5)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="CSV path; the sidecar JSON is written next to it")
    gen.set_defaults(func=cmd_generate)

    rank = sub.add_parser("rank", help="score-rank methods from existing results CSVs")
    rank.add_argument("results", nargs="+", help="results_*.csv files, one per table")
    rank.add_argument("--out", default="rank.csv")
    rank.set_defaults(func=cmd_rank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
