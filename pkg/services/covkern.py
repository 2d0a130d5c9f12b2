# File: services/covkern.py
"""
Empirical covariance kernels: full-sample and sequential second-moment estimators,
their mean-corrected variants and squared L^2 kernel distances.

A sample is either a CoeffSeries (coefficient mode, exact, quadrature weight 1) or a
grid sample (an N x M array or a sequence of GridFunction; grid mode, weight 1/M).
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from services.funcspace import CoeffSeries, FourierBasis, GridFunction
from utils.calculations import floor_fraction
from utils.errors import DimensionError, SymmetryError

logger = logging.getLogger(__name__)

GRID = "grid"
COEFF = "coeff"
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10

Sample = Union[CoeffSeries, np.ndarray, Sequence[GridFunction]]


def numerically_psd(eigenvalues) -> bool:
    """Smallest eigenvalue >= -PSD_TOL * largest."""
    values = np.asarray(eigenvalues, dtype=float)
    return bool(values.min() >= -PSD_TOL * max(values.max(), 0.0))


def observation_matrix(sample: Sample) -> tuple[np.ndarray, str, float]:
    """
    Rows of a sample together with its mode and quadrature weight.

    Args:
        sample: CoeffSeries, N x M grid array or sequence of GridFunction.

    Returns:
        tuple[np.ndarray, str, float]: (N x R matrix, mode, weight).
    """
    if isinstance(sample, CoeffSeries):
        return np.asarray(sample.coeffs), COEFF, 1.0
    if isinstance(sample, np.ndarray):
        if sample.ndim != 2:
            raise DimensionError(f"grid sample must be an N x M array, got shape {sample.shape}")
        return sample.astype(float, copy=False), GRID, 1.0 / sample.shape[1]
    functions = list(sample)
    if not functions:
        raise DimensionError("sample is empty")
    if not all(isinstance(f, GridFunction) for f in functions):
        raise TypeError("sample must be a CoeffSeries, a grid array or a sequence of GridFunction")
    M = functions[0].M
    if any(f.M != M for f in functions):
        raise DimensionError("grid functions in a sample must share the grid size")
    return np.vstack([f.values for f in functions]), GRID, 1.0 / M


def take_rows(sample: Sample, start: int, stop: int) -> Sample:
    """Slice observations [start, stop) keeping the sample's representation."""
    if isinstance(sample, CoeffSeries):
        return sample.with_coeffs(sample.coeffs[start:stop])
    if isinstance(sample, np.ndarray):
        return sample[start:stop]
    return list(sample)[start:stop]


def sample_size(sample: Sample) -> int:
    if isinstance(sample, (CoeffSeries, np.ndarray)):
        return len(sample)
    return len(list(sample))


@dataclass(frozen=True, eq=False)
class CovKernel:
    matrix: np.ndarray
    mode: str
    weight: float

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"kernel matrix must be square, got {matrix.shape}")
        if self.mode not in (GRID, COEFF):
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("kernel entries must be finite")
        scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
        if np.max(np.abs(matrix - matrix.T), initial=0.0) > SYMMETRY_TOL * scale:
            raise SymmetryError("kernel matrix is not symmetric")
        matrix = 0.5 * (matrix + matrix.T)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def trace(self) -> float:
        """Quadrature trace w * sum_i c_ii, the sum of the operator's eigenvalues."""
        return float(self.weight * np.trace(self.matrix))

    def is_psd(self) -> bool:
        return numerically_psd(np.linalg.eigvalsh(self.matrix))


@dataclass(frozen=True, eq=False)
class SplitSample:
    pre: Sample
    post: Sample
    theta_hat: float

    def __post_init__(self):
        if sample_size(self.pre) < 1 or sample_size(self.post) < 1:
            raise DimensionError("both segments of a split sample must be nonempty")
        if not 0 < self.theta_hat < 1:
            raise ValueError(f"theta_hat must lie in (0, 1), got {self.theta_hat}")


def split_sample(sample: Sample, k_hat: int) -> SplitSample:
    """Split after observation k_hat: X_1..X_k and X_{k+1}..X_N."""
    n = sample_size(sample)
    return SplitSample(take_rows(sample, 0, k_hat), take_rows(sample, k_hat, n), k_hat / n)


def zero_kernel(dimension: int, mode: str, weight: float) -> CovKernel:
    return CovKernel(np.zeros((dimension, dimension)), mode, weight)


def sequential_kernel(segment: Sample, lam: float, center: bool = False) -> CovKernel:
    """
    Sequential second-moment kernel of the first floor(n_seg * lam) observations.

    With center=True every observation is centered by the mean of the whole segment
    before the outer products are averaged.

    Args:
        segment: Ordered observations of one segment.
        lam (float): Fraction in [0, 1].
        center (bool): Subtract the full-segment mean.

    Returns:
        CovKernel: The averaged kernel, or the zero kernel if no observation is used.
    """
    X, mode, weight = observation_matrix(segment)
    if X.shape[0] < 1:
        raise DimensionError("segment is empty")
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if center:
        X = X - X.mean(axis=0)
    used = floor_fraction(X.shape[0], lam)
    if used == 0:
        return zero_kernel(X.shape[1], mode, weight)
    head = X[:used]
    return CovKernel(head.T @ head / used, mode, weight)


def sequential_kernels(segment: Sample, lams: Sequence[float], center: bool = False) -> list[CovKernel]:
    """sequential_kernel at every lam, sharing one pass of cumulative outer products."""
    X, mode, weight = observation_matrix(segment)
    if X.shape[0] < 1:
        raise DimensionError("segment is empty")
    if center:
        X = X - X.mean(axis=0)
    counts = [floor_fraction(X.shape[0], lam) for lam in lams]
    kernels = []
    running = np.zeros((X.shape[1], X.shape[1]))
    done = 0
    for used in sorted(set(counts)):
        if used > done:
            block = X[done:used]
            running = running + block.T @ block
            done = used
        kernels.append((used, running.copy()))
    by_count = dict(kernels)
    out = []
    for used in counts:
        if used == 0:
            out.append(zero_kernel(X.shape[1], mode, weight))
        else:
            out.append(CovKernel(by_count[used] / used, mode, weight))
    return out


def second_moment_kernel(sample: Sample, center: bool = False) -> CovKernel:
    return sequential_kernel(sample, 1.0, center)


def kernel_distance_sq(c1: CovKernel, c2: CovKernel) -> float:
    """Quadrature value of the double integral of (c1 - c2)^2."""
    if c1.mode != c2.mode or c1.dimension != c2.dimension:
        raise DimensionError(
            f"kernels are not comparable: {c1.mode}/{c1.dimension} vs {c2.mode}/{c2.dimension}"
        )
    diff = c1.matrix - c2.matrix
    return float(c1.weight ** 2 * np.sum(diff * diff))


def mercer_kernel(eigenvalues, eigenvectors=None) -> CovKernel:
    """
    Coefficient-mode kernel sum_k tau_k v_k v_k^T.

    Args:
        eigenvalues: Eigenvalues tau_k.
        eigenvectors: Columns v_k as coefficient vectors; the basis axes by default.

    Returns:
        CovKernel: The coefficient-mode kernel.
    """
    tau = np.asarray(eigenvalues, dtype=float)
    if eigenvectors is None:
        return CovKernel(np.diag(tau), COEFF, 1.0)
    V = np.asarray(eigenvectors, dtype=float)
    return CovKernel((V * tau) @ V.T, COEFF, 1.0)


def coefficient_to_grid(kernel: CovKernel, basis: FourierBasis) -> CovKernel:
    """Evaluate a coefficient-mode kernel c(s,t) = f(s)^T C f(t) on the basis grid."""
    if kernel.mode != COEFF or kernel.dimension != basis.T:
        raise DimensionError("coefficient_to_grid needs a coefficient kernel matching the basis order")
    F = basis.eval
    return CovKernel(F @ kernel.matrix @ F.T, GRID, 1.0 / basis.M)
