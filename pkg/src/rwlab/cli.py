"""Command-line entry point.

    rwlab <experiment> --config <path> [--out <dir>] [--threads <k>]
          [--override key=value]...

Exit codes: 0 for PASS or COMPLETED, 2 for FAIL, 3 for a solver failure,
64 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, apply_overrides, load_config
from .experiments import DRIVERS
from .operator import SolverError

EX_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EX_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rwlab",
        description="Two-media reduced-wave resolvent laboratory.")
    parser.add_argument("experiment", choices=sorted(DRIVERS))
    parser.add_argument("--config", required=True, help="key=value config file")
    parser.add_argument("--out", default="rwlab-out", help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="solver concurrency (default: RWLAB_THREADS or 1)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="replace a config pair")
    return parser


def _default_threads() -> int:
    raw = os.environ.get("RWLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads if args.threads is not None else _default_threads()
    if threads < 1:
        print("rwlab: error: --threads must be >= 1", file=sys.stderr)
        return EX_USAGE
    try:
        cfg = load_config(args.config)
        apply_overrides(cfg, args.override)
        outcome = DRIVERS[args.experiment](cfg, args.out, threads)
    except FileNotFoundError as exc:
        print(f"rwlab: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except ConfigError as exc:
        print(f"rwlab: config error: {exc}", file=sys.stderr)
        return EX_USAGE
    except SolverError as exc:
        print(f"rwlab: solver failure: {exc}", file=sys.stderr)
        return 3
    for line in outcome.notes:
        print(line)
    print(outcome.verdict)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
