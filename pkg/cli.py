"""
Command line driver.

    python cli.py run1d --config configs/norm0_sparse.toml --out out/sparse
    python cli.py dnasoup --config configs/dnasoup_b.toml --jobs 4 --out out/soup_b
    python cli.py analyze --input out/sparse/spacetime.bin --format csv --out out/analysis

Exit codes: 0 success, 1 config or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from engines.config import LOG_LEVEL
from engines.experiment_engine import ExperimentEngine, analyze_spacetime
from utils.validators import FORMATS, KINDS, U64_MAX, ConfigError, parse_config_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symbion", description="Symbiogenesis experiments on numerical, "
                                                 "Boolean and DNA substrates.")
    parser.add_argument("--log-level", default=LOG_LEVEL,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=_u64, help="run this single seed instead of the configured ones")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", action="append", choices=FORMATS, dest="formats",
                       help="artifact format, repeatable (default: from config)")
        p.add_argument("--jobs", type=_positive, help="worker processes for seed sweeps")

    p = sub.add_parser("analyze", help="metrics of a stored 1D spacetime")
    p.add_argument("--input", required=True, help="spacetime.csv or spacetime.bin")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", action="append", choices=FORMATS, dest="formats")
    return parser


def _run(args: argparse.Namespace) -> dict:
    if args.command == "analyze":
        formats = tuple(dict.fromkeys(args.formats or ["csv"]))
        return analyze_spacetime(args.input, args.out, formats)

    cfg = parse_config_file(args.config, expected_kind=args.command)
    if args.seed is not None:
        cfg = cfg.with_seeds([args.seed])
    if args.formats:
        cfg = cfg.with_formats(args.formats)
    return ExperimentEngine(cfg, args.out, args.jobs).run()


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"symbion: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(
        level=getattr(logging, args.log_level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )

    try:
        doc = _run(args)
    except ConfigError as e:
        print(f"symbion: invalid config\n{e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.exception("%s failed", args.command)
        print(f"symbion: {args.command} failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    logger.info("wrote %d artifacts to %s", len(doc["artifacts"]), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
