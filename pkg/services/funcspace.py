# File: services/funcspace.py
"""
Discretized L^2[0,1]: grid functions on midpoint nodes, the real Fourier basis and the
maps between sample space and coefficient space.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from utils.errors import DimensionError, InvalidOrderError, ProjectionError, ResolutionError

DEFAULT_T_SIMULATION = 21
DEFAULT_T_ANALYSIS = 41


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def midpoint_nodes(M: int) -> np.ndarray:
    """Midpoint nodes t_m = (m - 1/2) / M, m = 1..M."""
    return (np.arange(1, M + 1) - 0.5) / M


def fourier_design(T: int, x: np.ndarray) -> np.ndarray:
    """
    Evaluate the real Fourier basis of order T at arbitrary points.

    Columns are ordered 1, sqrt2 sin(2 pi x), ..., sqrt2 sin(pi (T-1) x),
    sqrt2 cos(2 pi x), ..., sqrt2 cos(pi (T-1) x).

    Args:
        T (int): Odd basis order.
        x (np.ndarray): Evaluation points in [0, 1].

    Returns:
        np.ndarray: Design matrix of shape (len(x), T).
    """
    if not isinstance(T, (int, np.integer)) or T < 1 or T % 2 == 0:
        raise InvalidOrderError(f"basis order must be a positive odd integer, got {T}")
    x = np.asarray(x, dtype=float)
    h = (T - 1) // 2
    freqs = 2.0 * np.pi * np.arange(1, h + 1)
    angles = np.outer(x, freqs)
    return np.hstack([np.ones((x.size, 1)), np.sqrt(2.0) * np.sin(angles), np.sqrt(2.0) * np.cos(angles)])


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1 or values.size < 2:
            raise DimensionError(f"grid function needs a 1-d grid with M >= 2, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def M(self) -> int:
        return self.values.size

    def __neg__(self) -> "GridFunction":
        return GridFunction(-self.values)


@dataclass(frozen=True, eq=False)
class FourierBasis:
    T: int
    M: int
    eval: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return midpoint_nodes(self.M)

    def column(self, k: int) -> GridFunction:
        """Basis function f_k (1-based) as a grid function."""
        return GridFunction(self.eval[:, k - 1])


@dataclass(frozen=True, eq=False)
class CoeffSeries:
    coeffs: np.ndarray
    basis: FourierBasis

    def __post_init__(self):
        coeffs = _frozen(self.coeffs)
        if coeffs.ndim != 2 or coeffs.shape[0] < 1:
            raise DimensionError(f"coefficients must be an N x T matrix with N >= 1, got {coeffs.shape}")
        if coeffs.shape[1] != self.basis.T:
            raise DimensionError(f"coefficient width {coeffs.shape[1]} does not match basis order {self.basis.T}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    @property
    def T(self) -> int:
        return self.coeffs.shape[1]

    def to_grid(self) -> np.ndarray:
        """N x M matrix of function values at the basis grid."""
        return self.coeffs @ self.basis.eval.T

    def with_coeffs(self, coeffs: np.ndarray) -> "CoeffSeries":
        return CoeffSeries(coeffs, self.basis)

    def __len__(self) -> int:
        return self.N


@lru_cache(maxsize=32)
def fourier_basis(T: int, M: int) -> FourierBasis:
    """
    Real Fourier basis of order T evaluated at M midpoint nodes.

    Args:
        T (int): Odd basis order.
        M (int): Grid size, at least 2 and at least 2(T - 1).

    Returns:
        FourierBasis: The basis with its M x T evaluation matrix.
    """
    if not isinstance(T, (int, np.integer)) or T < 1 or T % 2 == 0:
        raise InvalidOrderError(f"basis order must be a positive odd integer, got {T}")
    if M < 2 or M < 2 * (T - 1):
        raise ResolutionError(f"grid size M={M} cannot resolve order T={T}; need M >= max(2, {2 * (T - 1)})")
    return FourierBasis(T=int(T), M=int(M), eval=_frozen(fourier_design(T, midpoint_nodes(M))))


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Midpoint quadrature of the integral of f * g over [0, 1]."""
    if f.M != g.M:
        raise DimensionError(f"grid sizes differ: {f.M} vs {g.M}")
    return float(np.dot(f.values, g.values) / f.M)


def norm(f: GridFunction) -> float:
    return float(np.sqrt(inner_product(f, f)))


def synthesize(a, basis: FourierBasis) -> GridFunction:
    """Grid function sum_k a_k f_k."""
    a = np.asarray(a, dtype=float)
    if a.shape != (basis.T,):
        raise DimensionError(f"coefficient row has shape {a.shape}, basis order is {basis.T}")
    return GridFunction(basis.eval @ a)


def project(samples, nodes, basis: FourierBasis) -> np.ndarray:
    """
    Least-squares coefficients of sampled values on the basis.

    Args:
        samples: D sampled values.
        nodes: D node positions in [0, 1].
        basis (FourierBasis): Target basis; only its order is used.

    Returns:
        np.ndarray: Coefficient row of length T.
    """
    samples = np.asarray(samples, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    if samples.shape != nodes.shape or samples.ndim != 1:
        raise DimensionError(f"samples {samples.shape} and nodes {nodes.shape} must be matching vectors")
    if samples.size < basis.T:
        raise ProjectionError(f"{samples.size} samples cannot determine {basis.T} coefficients")
    if np.any(nodes < 0) or np.any(nodes > 1):
        raise ProjectionError("node positions must lie in [0, 1]")
    design = fourier_design(basis.T, nodes)
    coeffs, _, rank, _ = np.linalg.lstsq(design, samples, rcond=None)
    if rank < basis.T:
        raise ProjectionError(f"design matrix is rank deficient (rank {rank} < {basis.T})")
    return coeffs
