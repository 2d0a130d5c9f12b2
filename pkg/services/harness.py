# File: services/harness.py
"""Monte-Carlo rejection-probability experiments and the epsilon-sensitivity sweep."""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.linalg import LinAlgError

from services import datagen
from services.changepoint import estimate_changepoint
from services.covkern import split_sample
from services.selfnorm import (
    DEFAULT_K,
    DEFAULT_PIVOT_REPLICATES,
    DEFAULT_PIVOT_SEED,
    EIGENFUNCTION,
    EIGENVALUE,
    RELEVANT,
    NuMeasure,
    PivotDistribution,
    get_pivot,
    run_test,
)
from utils.calculations import config_hash, mc_standard_error, replicate_seed, threshold_to_angle
from utils.errors import ExperimentError, RelevantChangeError

logger = logging.getLogger(__name__)

DEFAULT_DELTAS = {(EIGENVALUE, 1): 0.1, (EIGENVALUE, 2): 0.005}
DEFAULT_DELTA_EIGENFUNCTION = 0.1
DEFAULT_GRID_POINTS = 9
TASK_SIZE = 100
CSV_COLUMNS = ["N", "magnitude", "rate", "se", "mean_theta_hat", "replicates", "median_abs_error",
               "config_hash", "seed"]


def default_delta(test_kind: str, j: int) -> float:
    """Relevance thresholds of the simulation designs."""
    if test_kind == EIGENFUNCTION:
        return DEFAULT_DELTA_EIGENFUNCTION
    return DEFAULT_DELTAS.get((test_kind, j), DEFAULT_DELTAS[(EIGENVALUE, 1)] / j ** 4)


@dataclass(frozen=True)
class ExperimentConfig:
    test_kind: str
    j: int = 1
    delta: float | None = None
    magnitudes: tuple | None = None
    sample_sizes: tuple = (200, 400, 600)
    replicates: int = 4000
    alpha: float = 0.05
    epsilon: float = 0.05
    K: int = DEFAULT_K
    pivot_replicates: int = DEFAULT_PIVOT_REPLICATES
    pivot_seed: int = DEFAULT_PIVOT_SEED
    seed: int = 0
    dependence: str = "iid"
    T: int = 21
    theta0: float = 0.5
    innovations: str = "gaussian"
    df: float = 5.0
    mode: str = RELEVANT

    def __post_init__(self):
        if self.test_kind not in (EIGENVALUE, EIGENFUNCTION):
            raise ValueError(f"unknown test kind {self.test_kind!r}; valid kinds are {EIGENVALUE}, {EIGENFUNCTION}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.magnitudes is not None and len(self.magnitudes) == 0:
            raise ValueError("magnitude grid must not be empty")
        if self.resolved_delta < 0:
            raise ValueError("delta must be >= 0")

    @property
    def resolved_delta(self) -> float:
        return default_delta(self.test_kind, self.j) if self.delta is None else self.delta

    @property
    def break_kind(self) -> str:
        return datagen.EIGENVALUE_SHIFT if self.test_kind == EIGENVALUE else datagen.ROTATION

    @property
    def boundary_magnitude(self) -> float | None:
        """Break magnitude at which the population change equals delta, if the design has one."""
        delta = self.resolved_delta
        if self.test_kind == EIGENVALUE:
            return delta * self.j ** 4 if self.j <= datagen.SHIFTED_COMPONENTS else None
        return threshold_to_angle(delta) if self.j <= 2 else None

    @property
    def resolved_magnitudes(self) -> tuple:
        if self.magnitudes is not None:
            return tuple(float(m) for m in self.magnitudes)
        cap = 1.0 if self.test_kind == EIGENVALUE else math.pi
        boundary = self.boundary_magnitude
        top = cap if boundary is None else min(cap, 4.0 * boundary)
        return tuple(float(m) for m in np.linspace(0.0, top, DEFAULT_GRID_POINTS))

    def dgp_spec(self, n: int, magnitude: float, seed: int) -> datagen.DGPSpec:
        return datagen.DGPSpec(
            N=n, T=self.T, theta0=self.theta0, dependence=self.dependence, break_kind=self.break_kind,
            magnitude=magnitude, seed=seed, innovations=self.innovations, df=self.df,
        )

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["delta"] = self.resolved_delta
        payload["magnitudes"] = list(self.resolved_magnitudes)
        payload["sample_sizes"] = list(self.sample_sizes)
        return payload

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())


@dataclass(frozen=True)
class ReplicateOutcome:
    rejected: bool
    theta_hat: float


@dataclass(frozen=True, eq=False)
class RejectionRow:
    n: int
    magnitude: float
    rate: float
    se: float
    mean_theta_hat: float
    replicates: int
    median_abs_error: float
    theta_hats: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class RejectionTable:
    config: ExperimentConfig
    rows: list[RejectionRow]

    def to_frame(self) -> pd.DataFrame:
        records = [
            {
                "N": row.n,
                "magnitude": row.magnitude,
                "rate": row.rate,
                "se": row.se,
                "mean_theta_hat": row.mean_theta_hat,
                "replicates": row.replicates,
                "median_abs_error": row.median_abs_error,
                "config_hash": self.config.hash,
                "seed": self.config.seed,
            }
            for row in self.rows
        ]
        return pd.DataFrame.from_records(records, columns=CSV_COLUMNS)

    def row(self, n: int, magnitude: float) -> RejectionRow:
        for r in self.rows:
            if r.n == n and math.isclose(r.magnitude, magnitude, rel_tol=0, abs_tol=1e-12):
                return r
        raise KeyError((n, magnitude))


@dataclass(frozen=True, eq=False)
class SweepResult:
    tables: dict
    histograms: pd.DataFrame


def run_replicate(config: ExperimentConfig, n: int, magnitude: float, replicate: int,
                  pivot: PivotDistribution) -> ReplicateOutcome:
    """Generate one sample, estimate the change point and run the configured test."""
    seed = replicate_seed(config.seed, n, magnitude, replicate)
    try:
        sample = datagen.generate(config.dgp_spec(n, magnitude, seed))
        estimate = estimate_changepoint(sample, config.epsilon)
        split = split_sample(sample, estimate.k_hat)
        result = run_test(split, config.j, config.test_kind, config.resolved_delta, pivot,
                          NuMeasure(config.K), config.alpha, config.mode, center=False)
    except (RelevantChangeError, LinAlgError) as e:
        raise ExperimentError(f"N={n}, magnitude={magnitude}: {e}", replicate, seed) from e
    return ReplicateOutcome(rejected=result.rejected, theta_hat=estimate.theta_hat)


def _run_task(config: ExperimentConfig, n: int, magnitude: float, start: int, stop: int,
              pivot: PivotDistribution) -> list[ReplicateOutcome]:
    return [run_replicate(config, n, magnitude, r, pivot) for r in range(start, stop)]


def _summarize(config: ExperimentConfig, n: int, magnitude: float, outcomes: list[ReplicateOutcome]) -> RejectionRow:
    rejections = sum(o.rejected for o in outcomes)
    thetas = np.array([o.theta_hat for o in outcomes])
    rate = rejections / len(outcomes)
    return RejectionRow(
        n=n,
        magnitude=magnitude,
        rate=rate,
        se=mc_standard_error(rate, len(outcomes)),
        mean_theta_hat=float(thetas.mean()),
        replicates=len(outcomes),
        median_abs_error=float(np.median(np.abs(thetas - config.theta0))),
        theta_hats=thetas,
    )


def run_experiment(config: ExperimentConfig, pivot: PivotDistribution | None = None, workers: int = 1,
                   cache_dir: str | Path | None = None) -> RejectionTable:
    """
    Rejection frequencies of the configured test for every (N, magnitude) cell.

    Replicate seeds depend on (seed, N, magnitude, replicate) only, and results are
    reduced in replicate order, so the table does not depend on the worker count.

    Args:
        config (ExperimentConfig): Experiment definition.
        pivot (PivotDistribution): Pivot of W; loaded or simulated from the config by default.
        workers (int): Worker processes.
        cache_dir: Quantile cache directory used when no pivot is given.

    Returns:
        RejectionTable: One row per (N, magnitude).
    """
    if pivot is None:
        pivot = get_pivot(config.K, config.pivot_replicates, config.pivot_seed, cache_dir, workers)
    if pivot.K != config.K:
        raise ValueError(f"pivot was simulated for K={pivot.K}, config uses K={config.K}")
    pivot = pivot.compact()
    cells = [(n, m) for n in config.sample_sizes for m in config.resolved_magnitudes]
    tasks = [
        (n, m, start, min(start + TASK_SIZE, config.replicates))
        for n, m in cells
        for start in range(0, config.replicates, TASK_SIZE)
    ]
    logger.info("experiment %s: %d cells x %d replicates on %d worker(s)",
                config.hash, len(cells), config.replicates, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(
                _run_task,
                [config] * len(tasks),
                *zip(*[(n, m, a, b) for n, m, a, b in tasks]),
                [pivot] * len(tasks),
            ))
    else:
        chunks = [_run_task(config, n, m, a, b, pivot) for n, m, a, b in tasks]

    outcomes: dict[tuple, list[ReplicateOutcome]] = {cell: [] for cell in cells}
    for (n, m, _, _), chunk in zip(tasks, chunks):
        outcomes[(n, m)].extend(chunk)
    rows = []
    for n, m in cells:
        row = _summarize(config, n, m, outcomes[(n, m)])
        logger.info("N=%d magnitude=%.6g: rate=%.4f (se %.4f)", n, m, row.rate, row.se)
        rows.append(row)
    return RejectionTable(config=config, rows=rows)


def theta_histogram(theta_hats: np.ndarray, bins: int = 20) -> pd.DataFrame:
    """Counts of theta_hat in equal bins on [0, 1]."""
    counts, edges = np.histogram(theta_hats, bins=bins, range=(0.0, 1.0))
    return pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts})


def epsilon_sweep(config: ExperimentConfig, epsilons, bins: int = 20, pivot: PivotDistribution | None = None,
                  workers: int = 1, cache_dir: str | Path | None = None) -> SweepResult:
    """
    run_experiment once per boundary trim epsilon, plus theta_hat histograms.

    Args:
        config (ExperimentConfig): Base experiment; its epsilon is replaced.
        epsilons: Trims to compare.
        bins (int): Histogram bins on [0, 1].
        pivot (PivotDistribution): Shared pivot.
        workers (int): Worker processes.
        cache_dir: Quantile cache directory used when no pivot is given.

    Returns:
        SweepResult: Tables keyed by epsilon and one long histogram frame with columns
                     epsilon, N, magnitude, bin_left, bin_right, count.
    """
    if pivot is None:
        pivot = get_pivot(config.K, config.pivot_replicates, config.pivot_seed, cache_dir, workers)
    tables = {}
    frames = []
    for eps in epsilons:
        table = run_experiment(replace(config, epsilon=float(eps)), pivot=pivot, workers=workers)
        tables[float(eps)] = table
        for row in table.rows:
            hist = theta_histogram(row.theta_hats, bins)
            hist.insert(0, "magnitude", row.magnitude)
            hist.insert(0, "N", row.n)
            hist.insert(0, "epsilon", float(eps))
            frames.append(hist)
    return SweepResult(tables=tables, histograms=pd.concat(frames, ignore_index=True))


def boundary_mass(histogram: pd.DataFrame, width: float = 0.05) -> float:
    """Share of theta_hat mass in the outer bins [0, width) and [1 - width, 1]."""
    outer = (histogram["bin_right"] <= width + 1e-12) | (histogram["bin_left"] >= 1.0 - width - 1e-12)
    total = histogram["count"].sum()
    return float(histogram.loc[outer, "count"].sum() / total) if total else 0.0


def write_rejection_table(table: RejectionTable, out_dir: str | Path, stem: str) -> tuple[Path, Path]:
    """Write <stem>.csv and <stem>.json (config echo plus rows)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame = table.to_frame()
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    frame.to_csv(csv_path, index=False, float_format="%.10g")
    payload = {
        "config": table.config.to_dict(),
        "config_hash": table.config.hash,
        "rows": frame.to_dict(orient="records"),
    }
    json_path.write_text(json.dumps(payload, indent=2, default=float) + "\n")
    return csv_path, json_path
