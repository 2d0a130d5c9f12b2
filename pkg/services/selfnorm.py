# File: services/selfnorm.py
"""
Self-normalized tests for relevant changes in eigenvalues and eigenfunctions.

The statistic at lambda = 1 is normalized by a functional of its own sequential path,
so the limit W = B(1) / [int lambda^2 (B(lambda) - lambda B(1))^2 nu(dlambda)]^(1/2)
is free of nuisance parameters and its quantiles can be simulated once.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from services.covkern import SplitSample, sample_size, sequential_kernels
from services.eigensys import aligned_distance, eigendecompose
from utils.errors import DimensionError, PivotError

logger = logging.getLogger(__name__)

EIGENVALUE = "eigenvalue"
EIGENFUNCTION = "eigenfunction"
RELEVANT = "relevant"
EQUIVALENCE = "equivalence"

DEFAULT_K = 20
DEFAULT_PIVOT_REPLICATES = 500_000
DEFAULT_PIVOT_SEED = 20190101
DEGENERATE_NORMALIZER = 1e-12
PIVOT_BLOCK = 50_000
CACHE_GRID = 10_000

# (1 - alpha)-quantiles of W for nu uniform on {l/K : l = 1..K-1}
PUBLISHED_QUANTILES = {
    20: {0.99: 16.479, 0.95: 9.895, 0.90: 7.097},
    30: {0.99: 16.248, 0.95: 9.925, 0.90: 7.149},
}


@dataclass(frozen=True, eq=False)
class NuMeasure:
    K: int = DEFAULT_K

    def __post_init__(self):
        if self.K < 2:
            raise ValueError(f"K must be at least 2, got {self.K}")

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.K) / self.K

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.K - 1, 1.0 / (self.K - 1))

    @property
    def path_grid(self) -> np.ndarray:
        """Support of nu followed by the point 1."""
        return np.append(self.support, 1.0)


@dataclass(frozen=True, eq=False)
class DiffPath:
    lambdas: np.ndarray
    values: np.ndarray
    j: int
    kind: str
    warnings: tuple = ()

    def value_at(self, lam: float) -> float:
        hits = np.flatnonzero(np.isclose(self.lambdas, lam, rtol=0.0, atol=1e-12))
        if hits.size == 0:
            raise DimensionError(f"path has no value at lambda={lam}")
        return float(self.values[hits[0]])

    @property
    def statistic(self) -> float:
        return self.value_at(1.0)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest test class

    kind: str
    j: int
    statistic: float
    normalizer: float
    delta: float
    ratio: float
    quantile: float
    alpha: float
    mode: str
    rejected: bool
    p_value: float
    warnings: tuple = field(default_factory=tuple)

    @property
    def decision(self) -> str:
        return "reject" if self.rejected else "retain"


@dataclass(frozen=True, eq=False)
class PivotDistribution:
    K: int
    R: int
    seed: int
    sample: np.ndarray

    def __post_init__(self):
        sample = np.sort(np.asarray(self.sample, dtype=float))
        if sample.size < 1:
            raise PivotError("pivot sample is empty")
        sample.setflags(write=False)
        object.__setattr__(self, "sample", sample)

    def quantile(self, p: float) -> float:
        return float(np.quantile(self.sample, p, method="inverted_cdf"))

    def cdf(self, x: float) -> float:
        """Empirical P(W <= x)."""
        return float(np.searchsorted(self.sample, x, side="right") / self.sample.size)

    def compact(self) -> "PivotDistribution":
        """Same key, sample replaced by the quantiles at probabilities i/10000."""
        if self.sample.size <= CACHE_GRID + 1:
            return self
        probabilities = np.arange(CACHE_GRID + 1) / CACHE_GRID
        grid = np.quantile(self.sample, probabilities, method="inverted_cdf")
        return PivotDistribution(K=self.K, R=self.R, seed=self.seed, sample=grid)


def diff_path(split: SplitSample, j: int, nu: NuMeasure, kind: str = EIGENVALUE, center: bool = False) -> DiffPath:
    """
    Sequential path of the squared eigenvalue difference or squared eigenfunction distance.

    Args:
        split (SplitSample): Segments before and after the estimated change.
        j (int): Eigen-index, 1-based.
        nu (NuMeasure): Weighting measure; the path is evaluated on its support and at 1.
        kind (str): "eigenvalue" or "eigenfunction".
        center (bool): Center each segment by its own mean.

    Returns:
        DiffPath: Values at every lambda of nu.path_grid.
    """
    if kind not in (EIGENVALUE, EIGENFUNCTION):
        raise ValueError(f"unknown test kind {kind!r}")
    lambdas = nu.path_grid
    pre = sequential_kernels(split.pre, lambdas, center)
    post = sequential_kernels(split.post, lambdas, center)
    dimension = pre[-1].dimension
    if not 1 <= j <= dimension:
        raise DimensionError(f"eigen-index {j} exceeds the {dimension} available eigenpairs")

    values = np.empty(lambdas.size)
    warnings: list[str] = []
    for i, (c1, c2) in enumerate(zip(pre, post)):
        zero1, zero2 = c1.is_zero(), c2.is_zero()
        s1 = None if zero1 else eigendecompose(c1, j + 1 if j < dimension else j)
        s2 = None if zero2 else eigendecompose(c2, j + 1 if j < dimension else j)
        if kind == EIGENVALUE:
            tau1 = 0.0 if zero1 else s1.eigenvalues[j - 1]
            tau2 = 0.0 if zero2 else s2.eigenvalues[j - 1]
            values[i] = (tau1 - tau2) ** 2
        elif zero1 and zero2:
            values[i] = 0.0
        elif zero1 or zero2:
            values[i] = 1.0
        else:
            values[i] = aligned_distance(s1.eigenfunction(j), s2.eigenfunction(j), c1.weight) ** 2
        if i == lambdas.size - 1:
            for label, system in (("first", s1), ("second", s2)):
                if system is not None:
                    warnings.extend(f"{label} segment: {w}" for w in system.gap_warnings(j))
    for w in warnings:
        logger.warning(w)
    return DiffPath(lambdas=lambdas, values=values, j=j, kind=kind, warnings=tuple(warnings))


def self_normalizer(path: DiffPath, nu: NuMeasure) -> float:
    """[sum_l w_l lambda_l^4 (path(lambda_l) - path(1))^2]^(1/2)."""
    end = path.statistic
    values = np.array([path.value_at(lam) for lam in nu.support])
    return float(np.sqrt(np.sum(nu.weights * nu.support ** 4 * (values - end) ** 2)))


def decide(
    path: DiffPath,
    normalizer: float,
    delta: float,
    pivot: PivotDistribution,
    alpha: float = 0.05,
    mode: str = RELEVANT,
) -> TestResult:
    """
    Compare (statistic - delta) / normalizer with the pivot quantile.

    Relevant mode rejects above q_{1-alpha}; equivalence mode rejects below q_alpha.
    A normalizer below 1e-12 always retains and records a warning.

    Args:
        path (DiffPath): Sequential path; its value at 1 is the statistic.
        normalizer (float): Self-normalizer of the path.
        delta (float): Relevance threshold, >= 0.
        pivot (PivotDistribution): Simulated distribution of W.
        alpha (float): Level in (0, 1).
        mode (str): "relevant" or "equivalence".

    Returns:
        TestResult: Decision with ratio, quantile and p-value P(W <= ratio).
    """
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if mode not in (RELEVANT, EQUIVALENCE):
        raise ValueError(f"unknown mode {mode!r}")
    statistic = path.statistic
    quantile = pivot.quantile(1.0 - alpha if mode == RELEVANT else alpha)
    warnings = list(path.warnings)
    excess = statistic - delta
    if normalizer < DEGENERATE_NORMALIZER:
        ratio = math.copysign(math.inf, excess) if excess != 0 else 0.0
        warnings.append(f"degenerate normalizer {normalizer:.3g}; null retained")
        logger.warning("degenerate normalizer %.3g for %s j=%d", normalizer, path.kind, path.j)
        rejected = False
    else:
        ratio = excess / normalizer
        rejected = ratio > quantile if mode == RELEVANT else ratio < quantile
    return TestResult(
        kind=path.kind,
        j=path.j,
        statistic=statistic,
        normalizer=normalizer,
        delta=delta,
        ratio=ratio,
        quantile=quantile,
        alpha=alpha,
        mode=mode,
        rejected=bool(rejected),
        p_value=pivot.cdf(ratio),
        warnings=tuple(warnings),
    )


def run_test(
    split: SplitSample,
    j: int,
    kind: str,
    delta: float,
    pivot: PivotDistribution,
    nu: NuMeasure | None = None,
    alpha: float = 0.05,
    mode: str = RELEVANT,
    center: bool = False,
) -> TestResult:
    """diff_path, self_normalizer and decide in one call."""
    nu = nu or NuMeasure(pivot.K)
    path = diff_path(split, j, nu, kind, center)
    return decide(path, self_normalizer(path, nu), delta, pivot, alpha, mode)


def _pivot_block(K: int, seed: int, block: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    brownian = np.cumsum(rng.standard_normal((size, K)) / math.sqrt(K), axis=1)
    end = brownian[:, -1]
    lam = np.arange(1, K) / K
    bridge = brownian[:, :-1] - lam * end[:, None]
    denominator = np.sqrt(np.mean(lam ** 2 * bridge ** 2, axis=1))
    return end / denominator


def simulate_pivot(K: int = DEFAULT_K, R: int = DEFAULT_PIVOT_REPLICATES, seed: int = DEFAULT_PIVOT_SEED,
                   workers: int = 1) -> PivotDistribution:
    """
    Simulate R draws of W with Brownian motion sampled exactly at l/K, l = 1..K.

    Replicates are drawn in fixed blocks with one substream per block, so the result
    depends on (K, R, seed) only and not on the number of workers.

    Args:
        K (int): Grid size of nu.
        R (int): Number of replicates.
        seed (int): Master seed.
        workers (int): Worker processes.

    Returns:
        PivotDistribution: Sorted sample of W.
    """
    if R < 1:
        raise PivotError(f"pivot simulation needs R >= 1, got {R}")
    if K < 2:
        raise PivotError(f"K must be at least 2, got {K}")
    sizes = [min(PIVOT_BLOCK, R - start) for start in range(0, R, PIVOT_BLOCK)]
    blocks = range(len(sizes))
    logger.info("simulating pivot K=%d R=%d seed=%d on %d worker(s)", K, R, seed, workers)
    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_pivot_block, [K] * len(sizes), [seed] * len(sizes), blocks, sizes))
    else:
        parts = [_pivot_block(K, seed, b, n) for b, n in zip(blocks, sizes)]
    return PivotDistribution(K=K, R=R, seed=seed, sample=np.concatenate(parts))


def quantile_table(pivot: PivotDistribution, levels=(0.99, 0.95, 0.90)) -> dict[float, float]:
    return {level: pivot.quantile(level) for level in levels}


def cache_path(cache_dir: str | Path, K: int, R: int, seed: int) -> Path:
    return Path(cache_dir) / f"pivot_K{K}_R{R}_seed{seed}.csv"


def write_quantile_cache(pivot: PivotDistribution, path: str | Path) -> Path:
    """Write quantiles at probabilities i/10000 with their (K, R, seed) key."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    probabilities = np.arange(CACHE_GRID + 1) / CACHE_GRID
    frame = pd.DataFrame({
        "K": pivot.K,
        "R": pivot.R,
        "seed": pivot.seed,
        "probability": probabilities,
        "quantile": np.quantile(pivot.sample, probabilities, method="inverted_cdf"),
    })
    frame.to_csv(path, index=False, float_format="%.10g")
    return path


def load_quantile_cache(path: str | Path, K: int | None = None, R: int | None = None,
                        seed: int | None = None) -> PivotDistribution:
    """Rebuild a pivot distribution from its quantile grid, checking the key when given."""
    frame = pd.read_csv(path)
    missing = {"K", "R", "seed", "probability", "quantile"} - set(frame.columns)
    if missing or frame.empty:
        raise PivotError(f"{path}: not a quantile cache (missing {sorted(missing)})")
    key = (int(frame["K"].iloc[0]), int(frame["R"].iloc[0]), int(frame["seed"].iloc[0]))
    for name, want, have in zip(("K", "R", "seed"), (K, R, seed), key):
        if want is not None and want != have:
            raise PivotError(f"{path}: cache has {name}={have}, requested {want}")
    return PivotDistribution(K=key[0], R=key[1], seed=key[2], sample=frame["quantile"].to_numpy())


def get_pivot(K: int = DEFAULT_K, R: int = DEFAULT_PIVOT_REPLICATES, seed: int = DEFAULT_PIVOT_SEED,
              cache_dir: str | Path | None = None, workers: int = 1) -> PivotDistribution:
    """Load the pivot from the cache directory, simulating and caching it on a miss."""
    if cache_dir is not None:
        path = cache_path(cache_dir, K, R, seed)
        if path.exists():
            logger.info("using cached pivot quantiles %s", path)
            return load_quantile_cache(path, K, R, seed)
    pivot = simulate_pivot(K, R, seed, workers)
    if cache_dir is not None:
        write_quantile_cache(pivot, cache_path(cache_dir, K, R, seed))
    return pivot
