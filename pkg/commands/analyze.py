# File: commands/analyze.py

import logging

from commands.common import check_valid, record, resolve_out_dir
from services import analysis_service
from services.results_service import record_analysis
from utils.errors import ConfigError
from utils.helpers import load_config, parse_angle, validate_analysis_data

logger = logging.getLogger(__name__)

SETTING_FIELDS = ("T", "epsilon", "angles", "j_fun", "j_val", "divisors", "alphas", "min_days", "K",
                  "pivot_replicates")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _text_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("analyze", parents=parents, help="relevance analysis of a daily CSV")
    parser.add_argument("csv_path", help="daily CSV with header date,value")
    parser.add_argument("--config", default=None, help="TOML file with an [analysis] table")
    parser.add_argument("--T", type=int, default=None, help="Fourier order of the yearly curves (41)")
    parser.add_argument("--epsilon", type=float, default=None, help="boundary trim of the change-point search (0.01)")
    parser.add_argument("--angles", type=_text_list, default=None, help="comma list, e.g. pi/16,pi/8,pi/4,2*pi/5")
    parser.add_argument("--j-fun", dest="j_fun", type=_int_list, default=None, help="eigenfunction indices (1..5)")
    parser.add_argument("--j-val", dest="j_val", type=_int_list, default=None, help="eigenvalue indices (1..12)")
    parser.add_argument("--divisors", type=_float_list, default=None, help="Delta_tau = tau_j / divisor (50,100,200)")
    parser.add_argument("--alphas", type=_float_list, default=None, help="levels (0.10,0.05,0.01)")
    parser.add_argument("--min-days", dest="min_days", type=int, default=None, help="minimum readings per year (360)")
    parser.add_argument("--K", type=int, default=None, help="grid size of the weighting measure (20)")
    parser.add_argument("--pivot-replicates", dest="pivot_replicates", type=int, default=None)
    parser.set_defaults(handler=cmd_analyze)


def settings_from(section: dict, args=None) -> analysis_service.AnalysisSettings:
    """Merge an [analysis] table with command-line overrides."""
    values = dict(section)
    unknown = set(values) - set(SETTING_FIELDS) - {"seed"}
    if unknown:
        raise ConfigError(f"analysis: unknown key(s) {', '.join(sorted(unknown))}")
    if args is not None:
        values.update({key: getattr(args, key) for key in SETTING_FIELDS if getattr(args, key) is not None})
        if args.seed is not None:
            values["seed"] = args.seed
    check_valid(validate_analysis_data(values), "analysis")
    if "seed" in values:
        values["pivot_seed"] = values.pop("seed")
    if "angles" in values:
        values["angles"] = tuple(parse_angle(a) for a in values["angles"])
    for key in ("j_fun", "j_val", "divisors", "alphas"):
        if key in values:
            values[key] = tuple(values[key])
    return analysis_service.AnalysisSettings(**values)


def cmd_analyze(args) -> int:
    """Ingest the CSV, run the relevance tests and write the report."""
    section = {}
    if args.config:
        section = load_config(args.config).get("analysis", {})
    settings = settings_from(section, args)
    out_dir = resolve_out_dir(args)

    report = analysis_service.run_analysis(args.csv_path, settings, cache_dir=args.quantile_cache,
                                           workers=args.workers)
    paths = analysis_service.write_report(report, out_dir)
    logger.info("wrote %s", ", ".join(p.name for p in paths))
    for warning in report.warnings:
        logger.warning(warning)
    print(f"change after {report.split_year} (theta_hat={report.theta_hat:.3f})")
    print(report.eigenfunction_matrix().to_string())
    print(report.eigenvalue_matrix().to_string())
    return record(args, out_dir, record_analysis, report)
