# File: services/datagen.py
"""
Simulation designs: Gaussian Fourier-coefficient innovations, optional fMA(1)
dependence, and eigenvalue-shift or rotation breaks after floor(N theta0).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from services.covkern import CovKernel, mercer_kernel
from services.funcspace import CoeffSeries, fourier_basis, fourier_design
from utils.calculations import floor_fraction
from utils.errors import DimensionError

logger = logging.getLogger(__name__)

NO_BREAK = "none"
EIGENVALUE_SHIFT = "eigenvalue_shift"
ROTATION = "rotation"
BREAK_KINDS = (NO_BREAK, EIGENVALUE_SHIFT, ROTATION)
SHIFTED_COMPONENTS = 4
DAYS_PER_YEAR = 365
DEFAULT_GRID = 200


def default_tau(T: int) -> np.ndarray:
    """tau_k = 1 / k^2, k = 1..T."""
    return 1.0 / np.arange(1, T + 1) ** 2


def psi_for_order(T: int) -> float:
    """
    Variance psi of the entries of Psi such that E sum_{l,k} |Psi_lk| = 1.

    With Psi_lk ~ N(0, psi), E|Psi_lk| = sqrt(2 psi / pi), so T^2 sqrt(2 psi / pi) = 1.
    """
    return math.pi / (2.0 * T ** 4)


@dataclass(frozen=True)
class DGPSpec:
    N: int
    T: int = 21
    theta0: float = 0.5
    tau: tuple | None = None
    dependence: str = "iid"
    break_kind: str = NO_BREAK
    magnitude: float = 0.0
    seed: int | None = None
    innovations: str = "gaussian"
    df: float = 5.0
    M: int | None = None

    def __post_init__(self):
        if self.N < 4:
            raise ValueError(f"N must be at least 4, got {self.N}")
        if self.dependence not in ("iid", "fma1"):
            raise ValueError(f"unknown dependence {self.dependence!r}")
        if self.break_kind not in BREAK_KINDS:
            raise ValueError(f"unknown break {self.break_kind!r}; valid: {', '.join(BREAK_KINDS)}")
        if self.break_kind == EIGENVALUE_SHIFT and not 0 <= self.magnitude <= 1:
            raise ValueError(f"eigenvalue-shift magnitude E must lie in [0, 1], got {self.magnitude}")
        if not 0 < self.theta0 < 1:
            raise ValueError(f"theta0 must lie in (0, 1), got {self.theta0}")
        if self.innovations not in ("gaussian", "student_t"):
            raise ValueError(f"unknown innovations {self.innovations!r}")
        if self.innovations == "student_t" and self.df <= 2:
            raise ValueError("student_t innovations need df > 2 for a finite variance")
        tau = self.eigenvalues
        if tau.size != self.T or np.any(tau <= 0) or np.any(np.diff(tau) > 0):
            raise ValueError("tau must hold T strictly positive, non-increasing values")

    @property
    def eigenvalues(self) -> np.ndarray:
        return default_tau(self.T) if self.tau is None else np.asarray(self.tau, dtype=float)

    @property
    def grid_size(self) -> int:
        return self.M or max(DEFAULT_GRID, 2 * (self.T - 1))

    @property
    def psi(self) -> float:
        return psi_for_order(self.T) if self.dependence == "fma1" else 0.0


def draw_innovations(rng: np.random.Generator, n: int, tau: np.ndarray, innovations: str = "gaussian",
                     df: float = 5.0) -> np.ndarray:
    """n x T innovations with covariance diag(tau)."""
    if innovations == "student_t":
        raw = rng.standard_t(df, size=(n, tau.size)) * math.sqrt((df - 2.0) / df)
    else:
        raw = rng.standard_normal((n, tau.size))
    return raw * np.sqrt(tau)


def draw_dependence_matrix(rng: np.random.Generator, T: int, psi: float) -> np.ndarray:
    if psi == 0:
        return np.zeros((T, T))
    return rng.normal(0.0, math.sqrt(psi), size=(T, T))


def fma1_coefficients(eps: np.ndarray, Psi: np.ndarray, psi: float) -> np.ndarray:
    """a_n = (eps_n + Psi eps_{n-1}) / sqrt(1 + psi) for the N rows after eps_0."""
    return (eps[1:] + eps[:-1] @ Psi.T) / math.sqrt(1.0 + psi)


def conditional_covariance(tau: np.ndarray, Psi: np.ndarray, psi: float) -> np.ndarray:
    """Marginal covariance of a_n given Psi: (diag(tau) + Psi diag(tau) Psi^T) / (1 + psi)."""
    D = np.diag(tau)
    return (D + Psi @ D @ Psi.T) / (1.0 + psi)


def generate(spec: DGPSpec, rng: np.random.Generator | None = None) -> CoeffSeries:
    """
    Draw one sample of Fourier coefficients and apply its break.

    A new Psi is drawn for every call, so every replicate sees its own realization.

    Args:
        spec (DGPSpec): Design parameters.
        rng (np.random.Generator): Random stream; seeded from spec.seed by default.

    Returns:
        CoeffSeries: N x T coefficients.
    """
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    tau = spec.eigenvalues
    eps = draw_innovations(rng, spec.N + 1, tau, spec.innovations, spec.df)
    Psi = draw_dependence_matrix(rng, spec.T, spec.psi)
    series = CoeffSeries(fma1_coefficients(eps, Psi, spec.psi), fourier_basis(spec.T, spec.grid_size))
    if spec.break_kind == EIGENVALUE_SHIFT:
        series = apply_eigenvalue_break(series, spec.magnitude, spec.theta0)
    elif spec.break_kind == ROTATION:
        series = apply_rotation_break(series, spec.magnitude, spec.theta0)
    return series


def apply_eigenvalue_break(series: CoeffSeries, E: float, theta0: float) -> CoeffSeries:
    """Scale coordinates 1-4 of rows n > floor(N theta0) by sqrt(1 - sqrt(E))."""
    if not 0 <= E <= 1:
        raise ValueError(f"E must lie in [0, 1], got {E}")
    start = floor_fraction(series.N, theta0)
    coeffs = np.array(series.coeffs)
    coeffs[start:, :SHIFTED_COMPONENTS] *= math.sqrt(1.0 - math.sqrt(E))
    return series.with_coeffs(coeffs)


def rotation_matrix(T: int, phi: float) -> np.ndarray:
    """Identity of order T with the first two coordinates rotated by phi."""
    if T < 2:
        raise DimensionError("a rotation of the first two components needs T >= 2")
    R = np.eye(T)
    c, s = math.cos(phi), math.sin(phi)
    R[:2, :2] = [[c, -s], [s, c]]
    return R


def apply_rotation_break(series: CoeffSeries, phi: float, theta0: float) -> CoeffSeries:
    """Multiply rows n > floor(N theta0) by R_{1,2}(phi)."""
    start = floor_fraction(series.N, theta0)
    coeffs = np.array(series.coeffs)
    coeffs[start:] = coeffs[start:] @ rotation_matrix(series.T, phi).T
    return series.with_coeffs(coeffs)


def population_kernels(spec: DGPSpec) -> tuple[CovKernel, CovKernel]:
    """Coefficient-mode kernels before and after the break of a DGPSpec."""
    tau = spec.eigenvalues
    before = mercer_kernel(tau)
    if spec.break_kind == EIGENVALUE_SHIFT:
        shifted = tau.copy()
        shifted[:SHIFTED_COMPONENTS] *= 1.0 - math.sqrt(spec.magnitude)
        return before, mercer_kernel(shifted)
    if spec.break_kind == ROTATION:
        return before, mercer_kernel(tau, rotation_matrix(spec.T, spec.magnitude))
    return before, before


def eigenvalue_shift_distance(E: float, tau) -> float:
    """Closed form E * sum_{k<=4} tau_k^2 of the squared kernel distance."""
    tau = np.asarray(tau, dtype=float)
    return float(E * np.sum(tau[:SHIFTED_COMPONENTS] ** 2))


def rotation_distance(phi: float, tau) -> float:
    """Closed form 2 (tau_1 - tau_2)^2 sin^2(phi) of the squared kernel distance."""
    tau = np.asarray(tau, dtype=float)
    return float(2.0 * (tau[0] - tau[1]) ** 2 * math.sin(phi) ** 2)


def rotation_weighted_eigenfunction_distance(phi: float, tau) -> float:
    """
    sum_k tau_k ||v_k - v'_k||^2 = (tau_1 + tau_2)(2 - 2cos(phi)) for the rotation design.

    Equals 5(1 - cos(phi)) / 2 for tau_k = 1 / k^2. This is an eigenfunction-weighted
    distance and not the kernel distance returned by kernel_distance_sq.
    """
    tau = np.asarray(tau, dtype=float)
    return float((tau[0] + tau[1]) * (2.0 - 2.0 * math.cos(phi)))


def day_nodes() -> np.ndarray:
    """Nodes (d - 1/2) / 365 of the fixed 365-day grid."""
    return (np.arange(1, DAYS_PER_YEAR + 1) - 0.5) / DAYS_PER_YEAR


def year_dates(year: int) -> pd.DatetimeIndex:
    """Calendar dates of a year without Feb 29."""
    dates = pd.date_range(f"{year}-01-01", f"{year}-12-31", freq="D")
    return dates[~((dates.month == 2) & (dates.day == 29))]


def to_daily_frame(series: CoeffSeries, start_year: int, mean_curve=None) -> pd.DataFrame:
    """
    Daily `date,value` rows, one year per coefficient row, on the 365-day grid.

    Args:
        series (CoeffSeries): Yearly curves.
        start_year (int): Calendar year of the first row.
        mean_curve: Optional 365 values added to every year.

    Returns:
        pd.DataFrame: Columns date (ISO string) and value.
    """
    values = series.coeffs @ fourier_design(series.T, day_nodes()).T
    if mean_curve is not None:
        values = values + np.asarray(mean_curve, dtype=float)
    frames = [
        pd.DataFrame({"date": year_dates(start_year + i).strftime("%Y-%m-%d"), "value": row})
        for i, row in enumerate(values)
    ]
    return pd.concat(frames, ignore_index=True)
