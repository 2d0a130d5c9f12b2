# File: commands/quantiles.py

import logging
from pathlib import Path

from commands.common import resolve_out_dir
from services.selfnorm import (
    DEFAULT_K,
    DEFAULT_PIVOT_REPLICATES,
    DEFAULT_PIVOT_SEED,
    PUBLISHED_QUANTILES,
    cache_path,
    quantile_table,
    simulate_pivot,
    write_quantile_cache,
)

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("quantiles", parents=parents, help="simulate the pivot W and cache its quantiles")
    parser.add_argument("--K", type=int, default=DEFAULT_K, help="grid size of the weighting measure")
    parser.add_argument("--R", type=int, default=DEFAULT_PIVOT_REPLICATES, help="Monte-Carlo replicates")
    parser.add_argument("--out", default=None, help="cache file; default pivot_K{K}_R{R}_seed{seed}.csv in the cache dir")
    parser.set_defaults(handler=cmd_quantiles)


def cmd_quantiles(args) -> int:
    """Simulate W, write the quantile cache and print the 90/95/99% quantiles."""
    seed = DEFAULT_PIVOT_SEED if args.seed is None else args.seed
    if args.out:
        path = Path(args.out)
    else:
        path = cache_path(args.quantile_cache or resolve_out_dir(args), args.K, args.R, seed)

    pivot = simulate_pivot(args.K, args.R, seed, args.workers)
    write_quantile_cache(pivot, path)
    logger.info("wrote %s", path)

    published = PUBLISHED_QUANTILES.get(args.K, {})
    for level, value in quantile_table(pivot).items():
        reference = f" (tabulated {published[level]:.3f})" if level in published else ""
        print(f"q_{level:.2f} = {value:.3f}{reference}")
    return 0
