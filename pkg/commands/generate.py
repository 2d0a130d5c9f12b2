# File: commands/generate.py

import logging
from pathlib import Path

import numpy as np

from commands.common import resolve_out_dir
from services import datagen
from utils.errors import ConfigError
from utils.helpers import DEPENDENCE_KINDS, INNOVATION_KINDS, parse_angle

logger = logging.getLogger(__name__)

DEFAULT_SEED = 1896


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "generate", parents=parents,
        help=f"write a synthetic daily date,value CSV (seed {DEFAULT_SEED} unless --seed is given)",
    )
    parser.add_argument("--years", type=int, default=123, help="number of yearly curves")
    parser.add_argument("--start-year", type=int, default=1896)
    parser.add_argument("--T", type=int, default=21, help="Fourier order of the simulated curves")
    parser.add_argument("--break", dest="break_kind", choices=datagen.BREAK_KINDS, default=datagen.NO_BREAK)
    parser.add_argument("--magnitude", default="0", help="E for eigenvalue_shift, an angle such as pi/3 for rotation")
    parser.add_argument("--theta0", type=float, default=0.5, help="break fraction")
    parser.add_argument("--break-after", type=int, default=None, help="number of years before the break; overrides --theta0")
    parser.add_argument("--dependence", choices=DEPENDENCE_KINDS, default="iid")
    parser.add_argument("--innovations", choices=INNOVATION_KINDS, default="gaussian")
    parser.add_argument("--mean-offset", type=float, default=0.0, help="constant added to every daily value")
    parser.add_argument("--output", default=None, help="CSV path; default daily.csv in the output directory")
    parser.set_defaults(handler=cmd_generate)


def cmd_generate(args) -> int:
    """Simulate yearly curves and write them as daily readings."""
    theta0 = args.theta0
    if args.break_after is not None:
        if not 0 < args.break_after < args.years:
            raise ConfigError(f"break-after must lie in 1..{args.years - 1}")
        theta0 = args.break_after / args.years
    try:
        spec = datagen.DGPSpec(
            N=args.years,
            T=args.T,
            theta0=theta0,
            dependence=args.dependence,
            break_kind=args.break_kind,
            magnitude=parse_angle(args.magnitude),
            seed=DEFAULT_SEED if args.seed is None else args.seed,
            innovations=args.innovations,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e

    series = datagen.generate(spec)
    mean_curve = np.full(datagen.DAYS_PER_YEAR, args.mean_offset) if args.mean_offset else None
    frame = datagen.to_daily_frame(series, args.start_year, mean_curve)
    path = Path(args.output) if args.output else resolve_out_dir(args) / "daily.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g")
    logger.info("wrote %d days of %d years to %s", len(frame), args.years, path)
    return 0
