# File: services/changepoint.py
"""CUSUM objective on second-moment kernels and the restricted-argmax change-point estimator."""

import logging
from dataclasses import dataclass

import numpy as np

from services.covkern import Sample, observation_matrix
from utils.calculations import ceil_fraction, floor_fraction
from utils.errors import ChangePointError

logger = logging.getLogger(__name__)

DEFAULT_EPSILON_SIMULATION = 0.05
DEFAULT_EPSILON_ANALYSIS = 0.01

# above this many floats the cumulative outer products are streamed instead of stacked
_STACK_LIMIT = 20_000_000


@dataclass(frozen=True, eq=False)
class ChangePointEstimate:
    k_hat: int
    theta_hat: float
    ks: np.ndarray
    objective: np.ndarray
    epsilon: float
    N: int

    @property
    def max_objective(self) -> float:
        return float(self.objective[self.k_hat - self.ks[0]])


def cusum_profile(sample: Sample) -> np.ndarray:
    """
    CUSUM objective f(k) for every k = 1..N-1.

    Args:
        sample: N observations (N >= 2).

    Returns:
        np.ndarray: f(1), ..., f(N-1).
    """
    X, _, weight = observation_matrix(sample)
    N, R = X.shape
    if N < 2:
        raise ChangePointError(f"CUSUM objective needs N >= 2, got {N}")
    ks = np.arange(1, N)
    if N * R * R <= _STACK_LIMIT:
        partial = np.cumsum(X[:, :, None] * X[:, None, :], axis=0)
        total = partial[-1]
        head = partial[:-1] / ks[:, None, None]
        tail = (total - partial[:-1]) / (N - ks)[:, None, None]
        dist = np.sum((head - tail) ** 2, axis=(1, 2))
    else:
        total = X.T @ X
        running = np.zeros((R, R))
        dist = np.empty(N - 1)
        for k in ks:
            running += np.outer(X[k - 1], X[k - 1])
            diff = running / k - (total - running) / (N - k)
            dist[k - 1] = np.sum(diff * diff)
    return ks * (N - ks) / N ** 2 * weight ** 2 * dist


def cusum_objective(sample: Sample, k: int) -> float:
    """CUSUM objective f(k) for a single split point 1 <= k <= N - 1."""
    X, _, weight = observation_matrix(sample)
    N = X.shape[0]
    if not 1 <= k <= N - 1:
        raise ChangePointError(f"k must lie in 1..{N - 1}, got {k}")
    head = X[:k].T @ X[:k] / k
    tail = X[k:].T @ X[k:] / (N - k)
    diff = head - tail
    return float(k * (N - k) / N ** 2 * weight ** 2 * np.sum(diff * diff))


def search_range(N: int, epsilon: float) -> tuple[int, int]:
    """Admissible split points ceil(N eps)..floor(N (1 - eps)), clipped to 1..N-1."""
    lo = max(1, ceil_fraction(N, epsilon))
    hi = min(N - 1, floor_fraction(N, 1.0 - epsilon))
    return lo, hi


def estimate_changepoint(sample: Sample, epsilon: float = DEFAULT_EPSILON_SIMULATION) -> ChangePointEstimate:
    """
    Smallest maximizer of the CUSUM objective over the trimmed search range.

    Args:
        sample: N >= 4 observations.
        epsilon (float): Boundary trim in [0, 0.5).

    Returns:
        ChangePointEstimate: k_hat, theta_hat = k_hat / N and the objective profile.
    """
    if not 0 <= epsilon < 0.5:
        raise ChangePointError(f"epsilon must lie in [0, 0.5), got {epsilon}")
    X, _, _ = observation_matrix(sample)
    N = X.shape[0]
    if N < 4:
        raise ChangePointError(f"change-point estimation needs N >= 4, got {N}")
    lo, hi = search_range(N, epsilon)
    if lo > hi:
        raise ChangePointError(f"empty search range for N={N}, epsilon={epsilon}")
    profile = cusum_profile(sample)
    window = profile[lo - 1:hi]
    k_hat = lo + int(np.argmax(window))
    logger.debug("change point k_hat=%d of N=%d (epsilon=%s)", k_hat, N, epsilon)
    return ChangePointEstimate(
        k_hat=k_hat,
        theta_hat=k_hat / N,
        ks=np.arange(lo, hi + 1),
        objective=window,
        epsilon=epsilon,
        N=N,
    )
