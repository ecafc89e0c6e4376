"""Command line entry point: ``phantomlab <kind> --config run.yaml --out results``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .empirics import default_workers
from .errors import PhantomLabError

SUBCOMMANDS = {
    "calibrate": "calibrate",
    "obrien": "obrien",
    "quenched": "quenched",
    "relext": "relext",
    "oracle-check": "oracle_check",
    "extremal-zero": "extremal_zero",
}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**64), got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phantomlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--out", help="output root (overrides 'output' in the file)")
        p.add_argument("--workers", type=_positive, help="worker processes (default: available cores)")
        p.add_argument("--seed", type=_u64, help="root seed override")
        p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    p = sub.add_parser("plot-data", help="long-format CSVs from a report directory")
    p.add_argument("report", help="report directory written by one of the experiment commands")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .experiments import plot_data_export, run_experiment

    if args.command == "plot-data":
        try:
            for path in plot_data_export(args.report):
                print(path)
        except PhantomLabError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0

    try:
        cfg = load_config(args.config, SUBCOMMANDS[args.command], args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.no_figures:
        cfg.figures = False
    out = args.out or cfg.output
    if out is None:
        print("error: no output directory (use --out or set 'output')", file=sys.stderr)
        return 2
    workers = args.workers or cfg.workers or default_workers()
    try:
        path = run_experiment(cfg, out, workers)
    except PhantomLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
