"""Command-line entry point: ``phasekey <experiment> [--config F] [--seed N] [--out F]``."""

import argparse
import sys

from ..errors import ConfigError, PhaseKeyError
from .config import KEY_HELP, KINDS, load_config
from .experiments import run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_EPILOG = "config file keys (flat key = value lines, # comments):\n" + "\n".join(
    f"  {k:<17} {v}" for k, v in KEY_HELP.items()) + (
    "\n\nexit status: 0 all checks pass, 1 a check failed, 2 usage or config error")


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phasekey", description="Phase-reciprocity key exchange experiments.",
        epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="kind", metavar="EXPERIMENT")
    sub.required = True
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment", epilog=_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--seed", type=_seed, help="override the config seed")
        p.add_argument("--out", metavar="PATH", help="report CSV path")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config, kind=args.kind, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"phasekey: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"phasekey: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"phasekey: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except PhaseKeyError as exc:
        print(f"phasekey: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
