# File: app.py

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from commands import analyze, generate, quantiles, simulate
from commands.common import common_parser
from utils.errors import RelevantChangeError

# Load environment variables
load_dotenv()

logger = logging.getLogger("relchange")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relchange",
        description="Tests for relevant changes in the eigensystem of covariance operators of functional time series.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parents = [common_parser()]
    for command in (quantiles, simulate, generate, analyze):
        command.register(subparsers, parents)
    return parser


def configure_logging(level: str | None) -> None:
    level = (level or os.getenv("RELCHANGE_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    if args.workers < 1:
        parser.error("--workers must be >= 1")

    try:
        return args.handler(args)
    except (RelevantChangeError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
