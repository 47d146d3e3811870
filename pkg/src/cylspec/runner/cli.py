"""Command-line entry point.

    cylspec <study> --config run.ini --out results/
    cylspec --check

Exit status: 0 when every property flag passes, 1 when a flag fails,
2 for configuration errors, 3 for numeric failures.
"""
from __future__ import annotations

import argparse
import sys
import time

from ..errors import ConfigurationError, CylspecError, NumericError
from .artifacts import write_result
from .checks import run_checks
from .config import STUDY_KINDS, load_config
from .studies import run_study

EXIT_OK, EXIT_FLAGS, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cylspec",
        description="Spectral studies of Laplacians on manifolds with cylindrical ends.")
    parser.add_argument("--check", action="store_true",
                        help="run the built-in property suite")
    sub = parser.add_subparsers(dest="study", metavar="study")
    for kind in STUDY_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} study")
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--check", action="store_true", dest="sub_check",
                       help="also run the built-in property suite")
    return parser


def _print_checks() -> bool:
    ok = True
    for name, passed, detail in run_checks():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return ok


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    want_check = args.check or getattr(args, "sub_check", False)
    if args.study is None and not want_check:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    status = EXIT_OK
    if want_check:
        if not _print_checks():
            status = EXIT_FLAGS
    if args.study is None:
        return status
    started = time.time()
    try:
        cfg = load_config(args.config, args.study)
        result = run_study(cfg)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error in {args.study} study: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CylspecError as exc:
        print(f"error in {args.study} study: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = write_result(result, cfg, args.out, started)
    for name, flag in manifest["flags"].items():
        print(f"{'PASS' if flag else 'FAIL'}  {name}")
    if not manifest["passed"]:
        status = EXIT_FLAGS
    return status


if __name__ == "__main__":
    sys.exit(main())
