# File: commands/common.py

import argparse
import logging
import os
from pathlib import Path

from database.connection import database_url, get_db
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def common_parser() -> argparse.ArgumentParser:
    """Flags shared by every subcommand."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=None, help="master seed of all randomness in the command")
    parser.add_argument("--quantile-cache", default=os.getenv("RELCHANGE_QUANTILE_CACHE"),
                        help="directory of cached pivot quantiles (env RELCHANGE_QUANTILE_CACHE)")
    parser.add_argument("--out-dir", default=None, help="output directory (env RELCHANGE_OUT_DIR, default results)")
    parser.add_argument("--workers", type=int, default=1, help="worker processes")
    parser.add_argument("--log-level", default=None, help="logging level (env RELCHANGE_LOG_LEVEL, default INFO)")
    parser.add_argument("--no-registry", action="store_true", help="do not record the run in the results database")
    return parser


def resolve_out_dir(args) -> Path:
    path = Path(args.out_dir or os.getenv("RELCHANGE_OUT_DIR", "results"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def check_valid(result: tuple[bool, str], source) -> None:
    """Raise ConfigError for a failed validate_* result."""
    is_valid, error_message = result
    if not is_valid:
        raise ConfigError(f"{source}: {error_message}")


def record(args, out_dir: Path, recorder, payload) -> int:
    """Store a result in the registry; exit code 1 when that fails."""
    if args.no_registry:
        return 0
    db = next(get_db(database_url(out_dir)))
    try:
        success, message = recorder(db, payload)
    finally:
        db.close()
    if not success:
        logger.error(message)
        return 1
    logger.info(message)
    return 0
