# File: commands/simulate.py

import logging
from pathlib import Path

from commands.common import check_valid, record, resolve_out_dir
from services import harness
from services.results_service import record_experiment
from services.selfnorm import EIGENFUNCTION, get_pivot
from utils.errors import ConfigError
from utils.helpers import load_config, parse_angle, validate_experiment_data

logger = logging.getLogger(__name__)

CONFIG_FIELDS = (
    "test_kind", "j", "delta", "sample_sizes", "replicates", "alpha", "epsilon", "K", "pivot_replicates",
    "pivot_seed", "seed", "dependence", "T", "theta0", "innovations", "df", "mode",
)
SWEEP_FIELDS = ("epsilons", "bins")


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("simulate", parents=parents, help="run a rejection-probability experiment")
    parser.add_argument("config", help="TOML file with an [experiment] table")
    parser.add_argument("--replicates", type=int, default=None, help="override the replicates of the config")
    parser.set_defaults(handler=cmd_simulate)


def experiment_from_section(section: dict, seed: int | None = None,
                            replicates: int | None = None) -> harness.ExperimentConfig:
    """Build an ExperimentConfig from a validated [experiment] table."""
    unknown = set(section) - set(CONFIG_FIELDS) - set(SWEEP_FIELDS) - {"magnitudes"}
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(sorted(unknown))}")
    values = {key: section[key] for key in CONFIG_FIELDS if key in section}
    if "sample_sizes" in values:
        values["sample_sizes"] = tuple(values["sample_sizes"])
    if "magnitudes" in section:
        parse = parse_angle if section["test_kind"] == EIGENFUNCTION else float
        values["magnitudes"] = tuple(parse(m) for m in section["magnitudes"])
    if seed is not None:
        values["seed"] = seed
    if replicates is not None:
        values["replicates"] = replicates
    try:
        return harness.ExperimentConfig(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def cmd_simulate(args) -> int:
    """Run the experiment of a config file and write its rejection tables."""
    config_path = Path(args.config)
    section = load_config(config_path).get("experiment")
    if section is None:
        raise ConfigError(f"{config_path}: missing [experiment] table")
    check_valid(validate_experiment_data(section), config_path)
    config = experiment_from_section(section, args.seed, args.replicates)
    out_dir = resolve_out_dir(args)
    stem = config_path.stem

    pivot = get_pivot(config.K, config.pivot_replicates, config.pivot_seed, args.quantile_cache, args.workers)
    if "epsilons" in section:
        return _run_sweep(args, config, section, pivot, out_dir, stem)

    table = harness.run_experiment(config, pivot=pivot, workers=args.workers)
    csv_path, json_path = harness.write_rejection_table(table, out_dir, stem)
    logger.info("wrote %s and %s", csv_path, json_path)
    print(table.to_frame().to_string(index=False))
    return record(args, out_dir, record_experiment, table)


def _run_sweep(args, config, section, pivot, out_dir: Path, stem: str) -> int:
    sweep = harness.epsilon_sweep(config, section["epsilons"], section.get("bins", 20),
                                  pivot=pivot, workers=args.workers)
    status = 0
    for eps, table in sweep.tables.items():
        harness.write_rejection_table(table, out_dir, f"{stem}_eps{eps:g}")
        print(f"epsilon = {eps:g}")
        print(table.to_frame().to_string(index=False))
        status = max(status, record(args, out_dir, record_experiment, table))
    hist_path = out_dir / f"{stem}_theta_hist.csv"
    sweep.histograms.to_csv(hist_path, index=False, float_format="%.10g")
    logger.info("wrote %d tables and %s", len(sweep.tables), hist_path)
    return status
