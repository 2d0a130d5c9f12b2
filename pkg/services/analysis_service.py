# File: services/analysis_service.py
"""
Change-point analysis of a daily series: yearly curves, the CUSUM split, and relevance
tables for eigenfunction and eigenvalue differences between the two segments.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from services.changepoint import DEFAULT_EPSILON_ANALYSIS, estimate_changepoint
from services.covkern import second_moment_kernel, split_sample
from services.datagen import day_nodes
from services.eigensys import align_to, eigendecompose
from services.funcspace import DEFAULT_T_ANALYSIS, fourier_design
from services.ingest_service import DEFAULT_MIN_DAYS, DailyIngest, ingest_daily
from services.selfnorm import (
    DEFAULT_K,
    DEFAULT_PIVOT_REPLICATES,
    DEFAULT_PIVOT_SEED,
    EIGENFUNCTION,
    EIGENVALUE,
    NuMeasure,
    PivotDistribution,
    decide,
    diff_path,
    get_pivot,
    self_normalizer,
)
from utils.calculations import angle_to_threshold
from utils.errors import ConfigError, IngestError
from utils.helpers import format_angle, format_relevance_cell, significance_class

logger = logging.getLogger(__name__)

MIN_YEARS = 8
DEFAULT_ANGLES = (math.pi / 16, math.pi / 8, math.pi / 4, 2 * math.pi / 5)
DEFAULT_J_FUN = (1, 2, 3, 4, 5)
DEFAULT_J_VAL = tuple(range(1, 13))
DEFAULT_DIVISORS = (50.0, 100.0, 200.0)
DEFAULT_ALPHAS = (0.10, 0.05, 0.01)
VARIANCE_COMPONENTS = (1, 3, 5)


@dataclass(frozen=True)
class AnalysisSettings:
    T: int = DEFAULT_T_ANALYSIS
    epsilon: float = DEFAULT_EPSILON_ANALYSIS
    angles: tuple = DEFAULT_ANGLES
    j_fun: tuple = DEFAULT_J_FUN
    j_val: tuple = DEFAULT_J_VAL
    divisors: tuple = DEFAULT_DIVISORS
    alphas: tuple = DEFAULT_ALPHAS
    min_days: int = DEFAULT_MIN_DAYS
    K: int = DEFAULT_K
    pivot_replicates: int = DEFAULT_PIVOT_REPLICATES
    pivot_seed: int = DEFAULT_PIVOT_SEED

    def __post_init__(self):
        for name in ("angles", "j_fun", "j_val", "divisors", "alphas"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name}: list must not be empty")
        if any(not 0 < a < 1 for a in self.alphas):
            raise ConfigError("alphas: every level must lie in (0, 1)")
        if any(d <= 0 for d in self.divisors):
            raise ConfigError("divisors: must be positive")
        if any(not 0 < phi <= math.pi for phi in self.angles):
            raise ConfigError("angles: must lie in (0, pi]")

    @property
    def decision_alpha(self) -> float:
        """Cells are decided at the largest level; smaller levels show up as p-value classes."""
        return max(self.alphas)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "epsilon": self.epsilon,
            "angles": [format_angle(phi) for phi in self.angles],
            "j_fun": list(self.j_fun),
            "j_val": list(self.j_val),
            "divisors": list(self.divisors),
            "alphas": list(self.alphas),
            "min_days": self.min_days,
            "K": self.K,
            "pivot_replicates": self.pivot_replicates,
            "pivot_seed": self.pivot_seed,
        }


@dataclass(frozen=True)
class RelevanceCell:
    kind: str
    j: int
    label: str  # row label: angle or divisor
    delta: float
    statistic: float
    normalizer: float
    ratio: float
    p_value: float
    rejected: bool
    rejected_at: dict
    warnings: tuple = ()

    @property
    def text(self) -> str:
        return format_relevance_cell(self.rejected, self.p_value)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "j": self.j,
            "threshold": self.label,
            "delta": self.delta,
            "statistic": self.statistic,
            "normalizer": self.normalizer,
            "ratio": self.ratio,
            "p_value": self.p_value,
            "rejected": self.rejected,
            "significance": significance_class(self.p_value) if self.rejected else "",
            "cell": self.text,
            **{f"reject_{alpha:g}": flag for alpha, flag in self.rejected_at.items()},
        }


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    source: str
    settings: AnalysisSettings
    years: tuple
    excluded: dict
    k_hat: int
    theta_hat: float
    split_year: int
    eigenvalues_pre: np.ndarray
    eigenvalues_post: np.ndarray
    trace_pre: float
    trace_post: float
    eigenfunctions_pre: np.ndarray  # rows on the 365-day grid
    eigenfunctions_post: np.ndarray
    eigenfunction_cells: list
    eigenvalue_cells: list
    warnings: tuple = field(default_factory=tuple)

    def variance_explained(self, components: int) -> tuple[float, float]:
        """Share of the total variance in the first components of each segment."""
        pre = float(np.sum(self.eigenvalues_pre[:components]) / self.trace_pre) if self.trace_pre > 0 else math.nan
        post = float(np.sum(self.eigenvalues_post[:components]) / self.trace_post) if self.trace_post > 0 else math.nan
        return pre, post

    def _matrix(self, cells: list, row_labels: list, columns: tuple) -> pd.DataFrame:
        table = pd.DataFrame(index=row_labels, columns=[str(j) for j in columns], dtype=object)
        for cell in cells:
            table.loc[cell.label, str(cell.j)] = cell.text
        table.index.name = "threshold"
        return table

    def eigenfunction_matrix(self) -> pd.DataFrame:
        """Rows are angles, columns eigenfunction indices."""
        labels = [f"phi={format_angle(phi)}" for phi in self.settings.angles]
        return self._matrix(self.eigenfunction_cells, labels, self.settings.j_fun)

    def eigenvalue_matrix(self) -> pd.DataFrame:
        """Rows are divisors of tau_j of the first segment, columns eigenvalue indices."""
        labels = [f"tau_j/{d:g}" for d in self.settings.divisors]
        return self._matrix(self.eigenvalue_cells, labels, self.settings.j_val)

    def to_dict(self) -> dict:
        count = max(max(self.settings.j_val), max(self.settings.j_fun))
        return {
            "source": self.source,
            "settings": self.settings.to_dict(),
            "years": [self.years[0], self.years[-1]],
            "n_years": len(self.years),
            "excluded_years": {str(y): n for y, n in self.excluded.items()},
            "k_hat": self.k_hat,
            "theta_hat": self.theta_hat,
            "split_year": self.split_year,
            "eigenvalues": {
                "first_segment": self.eigenvalues_pre[:count].tolist(),
                "second_segment": self.eigenvalues_post[:count].tolist(),
            },
            "variance_explained": {
                str(p): list(self.variance_explained(p)) for p in VARIANCE_COMPONENTS
            },
            "eigenfunction_relevance": [c.to_dict() for c in self.eigenfunction_cells],
            "eigenvalue_relevance": [c.to_dict() for c in self.eigenvalue_cells],
            "warnings": list(self.warnings),
        }


def _cell(kind: str, j: int, label: str, path, normalizer: float, delta: float, pivot: PivotDistribution,
          settings: AnalysisSettings) -> RelevanceCell:
    results = {alpha: decide(path, normalizer, delta, pivot, alpha) for alpha in settings.alphas}
    main = results[settings.decision_alpha]
    return RelevanceCell(
        kind=kind,
        j=j,
        label=label,
        delta=delta,
        statistic=main.statistic,
        normalizer=main.normalizer,
        ratio=main.ratio,
        p_value=main.p_value,
        rejected=main.rejected,
        rejected_at={alpha: r.rejected for alpha, r in results.items()},
        warnings=main.warnings,
    )


def analyze_series(data: DailyIngest, settings: AnalysisSettings, pivot: PivotDistribution,
                   source: str = "") -> AnalysisReport:
    """
    Estimate the change point and run every relevance test on centered segment kernels.

    Args:
        data (DailyIngest): Yearly coefficient curves.
        settings (AnalysisSettings): Thresholds, indices and levels.
        pivot (PivotDistribution): Distribution of W for settings.K.
        source (str): Name of the input, echoed in the report.

    Returns:
        AnalysisReport: Split, segment eigensystems and both relevance tables.
    """
    series = data.series
    if series.N < MIN_YEARS:
        raise IngestError(f"analysis needs at least {MIN_YEARS} retained years, got {series.N}")
    if max(max(settings.j_fun), max(settings.j_val)) > series.T:
        raise ConfigError(f"eigen-indices must not exceed the basis order T={series.T}")
    if pivot.K != settings.K:
        raise ConfigError(f"pivot was simulated for K={pivot.K}, settings use K={settings.K}")

    estimate = estimate_changepoint(series, settings.epsilon)
    split = split_sample(series, estimate.k_hat)
    split_year = data.years[estimate.k_hat - 1]
    logger.info("change point after %d (k_hat=%d, theta_hat=%.3f)", split_year, estimate.k_hat, estimate.theta_hat)

    kernel_pre = second_moment_kernel(split.pre, center=True)
    kernel_post = second_moment_kernel(split.post, center=True)
    system_pre = eigendecompose(kernel_pre)
    system_post = align_to(eigendecompose(kernel_post), system_pre)
    design = fourier_design(series.T, day_nodes())

    nu = NuMeasure(settings.K)
    warnings: list[str] = []
    eigenfunction_cells = []
    for j in settings.j_fun:
        path = diff_path(split, j, nu, EIGENFUNCTION, center=True)
        normalizer = self_normalizer(path, nu)
        warnings.extend(f"eigenfunction {j}: {w}" for w in path.warnings)
        for phi in settings.angles:
            eigenfunction_cells.append(_cell(EIGENFUNCTION, j, f"phi={format_angle(phi)}", path, normalizer,
                                             angle_to_threshold(phi), pivot, settings))
    eigenvalue_cells = []
    for j in settings.j_val:
        path = diff_path(split, j, nu, EIGENVALUE, center=True)
        normalizer = self_normalizer(path, nu)
        warnings.extend(f"eigenvalue {j}: {w}" for w in path.warnings)
        for divisor in settings.divisors:
            delta = float(system_pre.eigenvalues[j - 1]) / divisor
            eigenvalue_cells.append(_cell(EIGENVALUE, j, f"tau_j/{divisor:g}", path, normalizer,
                                          delta, pivot, settings))
    warnings.extend(w for c in eigenfunction_cells + eigenvalue_cells for w in c.warnings
                    if w.startswith("degenerate"))

    return AnalysisReport(
        source=source,
        settings=settings,
        years=data.years,
        excluded=dict(data.excluded),
        k_hat=estimate.k_hat,
        theta_hat=estimate.theta_hat,
        split_year=split_year,
        eigenvalues_pre=system_pre.eigenvalues,
        eigenvalues_post=system_post.eigenvalues,
        trace_pre=kernel_pre.trace(),
        trace_post=kernel_post.trace(),
        eigenfunctions_pre=system_pre.eigenfunctions @ design.T,
        eigenfunctions_post=system_post.eigenfunctions @ design.T,
        eigenfunction_cells=eigenfunction_cells,
        eigenvalue_cells=eigenvalue_cells,
        warnings=tuple(dict.fromkeys(warnings)),
    )


def run_analysis(csv_path: str | Path, settings: AnalysisSettings | None = None,
                 pivot: PivotDistribution | None = None, cache_dir: str | Path | None = None,
                 workers: int = 1) -> AnalysisReport:
    """ingest_daily followed by analyze_series."""
    settings = settings or AnalysisSettings()
    data = ingest_daily(csv_path, settings.T, settings.min_days)
    if pivot is None:
        pivot = get_pivot(settings.K, settings.pivot_replicates, settings.pivot_seed, cache_dir, workers)
    return analyze_series(data, settings, pivot, source=Path(csv_path).name)


def write_report(report: AnalysisReport, out_dir: str | Path) -> list[Path]:
    """
    Write the report files.

    Args:
        report (AnalysisReport): Finished analysis.
        out_dir: Target directory, created if needed.

    Returns:
        list[Path]: report.json, relevance CSVs, eigenvalue and eigenfunction CSVs, tables.txt.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    path = out_dir / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, default=float) + "\n")
    paths.append(path)

    for name, cells in (("eigenfunction_relevance", report.eigenfunction_cells),
                        ("eigenvalue_relevance", report.eigenvalue_cells)):
        path = out_dir / f"{name}.csv"
        pd.DataFrame([c.to_dict() for c in cells]).to_csv(path, index=False, float_format="%.10g")
        paths.append(path)

    count = report.eigenvalues_pre.size
    path = out_dir / "eigenvalues.csv"
    pd.DataFrame({
        "j": np.arange(1, count + 1),
        "first_segment": report.eigenvalues_pre,
        "second_segment": report.eigenvalues_post,
    }).to_csv(path, index=False, float_format="%.10g")
    paths.append(path)

    rows = max(report.settings.j_fun)
    frame = pd.DataFrame({"node": day_nodes()})
    for j in range(1, rows + 1):
        frame[f"v{j}_first"] = report.eigenfunctions_pre[j - 1]
        frame[f"v{j}_second"] = report.eigenfunctions_post[j - 1]
    path = out_dir / "eigenfunctions.csv"
    frame.to_csv(path, index=False, float_format="%.10g")
    paths.append(path)

    path = out_dir / "tables.txt"
    header = (f"{report.source}: {len(report.years)} years {report.years[0]}-{report.years[-1]}, "
              f"change after {report.split_year} (theta_hat={report.theta_hat:.3f})")
    path.write_text("\n\n".join([
        header,
        "Eigenfunction relevance\n" + report.eigenfunction_matrix().to_string(),
        "Eigenvalue relevance\n" + report.eigenvalue_matrix().to_string(),
    ]) + "\n")
    paths.append(path)
    return paths
