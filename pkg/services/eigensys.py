# File: services/eigensys.py
"""Eigen-decomposition of covariance kernels viewed as integral operators."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from services.covkern import CovKernel, numerically_psd
from services.funcspace import GridFunction, inner_product
from utils.errors import DimensionError, NormalizationError, SymmetryError

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-6
GAP_TOL = 1e-10
SIGN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # p_max x R, each row of unit quadrature norm
    mode: str
    weight: float

    @property
    def p_max(self) -> int:
        return self.eigenvalues.size

    def eigenfunction(self, j: int) -> np.ndarray:
        """j-th eigenfunction (1-based) in the kernel's representation."""
        if not 1 <= j <= self.p_max:
            raise DimensionError(f"eigen-index {j} outside 1..{self.p_max}")
        return self.eigenfunctions[j - 1]

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(self.weight * np.dot(u, v))

    def gap_warnings(self, j: int) -> list[str]:
        """Warnings when the j-th eigenvalue is not separated from its neighbours."""
        top = max(float(self.eigenvalues[0]), 0.0)
        tol = GAP_TOL * top
        warnings = []
        for other in (j - 1, j + 1):
            if 1 <= other <= self.p_max and abs(self.eigenvalues[j - 1] - self.eigenvalues[other - 1]) <= tol:
                warnings.append(
                    f"eigenvalues {min(j, other)} and {max(j, other)} are nearly degenerate; "
                    f"eigenfunction {j} is not identifiable"
                )
        return warnings


def _sign_convention(vectors: np.ndarray) -> np.ndarray:
    """Flip rows so their first coordinate that is not ~0 is positive."""
    out = vectors.copy()
    for row in out:
        scale = np.max(np.abs(row), initial=0.0)
        nonzero = np.flatnonzero(np.abs(row) > SIGN_TOL * max(scale, 1.0))
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.0
    return out


def eigendecompose(kernel: CovKernel, p_max: int | None = None) -> EigenSystem:
    """
    Leading eigenpairs of the integral operator with the given kernel.

    Matrix eigenvalues are scaled by the quadrature weight, eigenvectors rescaled to
    unit quadrature norm and sorted by descending eigenvalue.

    Args:
        kernel (CovKernel): Symmetric kernel.
        p_max (int): Number of eigenpairs to keep; all by default.

    Returns:
        EigenSystem: Eigenvalues and eigenfunctions.
    """
    matrix = kernel.matrix
    R = kernel.dimension
    p_max = R if p_max is None else p_max
    if not 1 <= p_max <= R:
        raise DimensionError(f"p_max must lie in 1..{R}, got {p_max}")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(matrix).max(initial=0.0))):
        raise SymmetryError("kernel matrix is not symmetric")
    values, vectors = linalg.eigh(matrix)
    if not numerically_psd(values):
        logger.warning("kernel is not positive semi-definite: smallest eigenvalue %.3g, largest %.3g",
                       values.min() * kernel.weight, values.max() * kernel.weight)
    order = np.argsort(-values, kind="stable")[:p_max]
    eigenvalues = values[order] * kernel.weight
    eigenfunctions = vectors[:, order].T / np.sqrt(kernel.weight)
    eigenfunctions = _sign_convention(eigenfunctions)
    eigenvalues.setflags(write=False)
    eigenfunctions.setflags(write=False)
    return EigenSystem(eigenvalues, eigenfunctions, kernel.mode, kernel.weight)


def align_to(system: EigenSystem, reference: EigenSystem) -> EigenSystem:
    """Flip eigenfunctions so each has a nonnegative inner product with the reference."""
    count = min(system.p_max, reference.p_max)
    signs = np.ones(system.p_max)
    for j in range(count):
        if system.inner(system.eigenfunctions[j], reference.eigenfunctions[j]) < 0:
            signs[j] = -1.0
    flipped = system.eigenfunctions * signs[:, None]
    flipped.setflags(write=False)
    return EigenSystem(system.eigenvalues, flipped, system.mode, system.weight)


def aligned_distance(v, u, weight: float | None = None) -> float:
    """
    Sign-invariant distance min(||v - u||, ||v + u||) = sqrt(2 - 2|<v, u>|).

    Args:
        v: Unit function, as GridFunction or representation vector.
        u: Unit function in the same representation.
        weight (float): Quadrature weight for vectors; 1 (coefficient mode) by default.

    Returns:
        float: The distance, in [0, sqrt(2)].
    """
    if isinstance(v, GridFunction) and isinstance(u, GridFunction):
        vv, uu, vu = inner_product(v, v), inner_product(u, u), inner_product(v, u)
    else:
        v = np.asarray(v, dtype=float)
        u = np.asarray(u, dtype=float)
        if v.shape != u.shape:
            raise DimensionError(f"functions have shapes {v.shape} and {u.shape}")
        w = 1.0 if weight is None else weight
        vv, uu, vu = w * np.dot(v, v), w * np.dot(u, u), w * np.dot(v, u)
    if abs(vv - 1.0) > UNIT_TOL or abs(uu - 1.0) > UNIT_TOL:
        raise NormalizationError(f"aligned_distance needs unit functions, got norms^2 {vv:.3g} and {uu:.3g}")
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * min(1.0, abs(vu)))))
