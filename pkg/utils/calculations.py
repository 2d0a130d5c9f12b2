# File: utils/calculations.py

import hashlib
import json
import math

FLOOR_GUARD = 1e-9


def floor_fraction(n: int, fraction: float) -> int:
    """
    Compute floor(n * fraction) without losing a sample to representation error.

    Args:
        n (int): Number of observations.
        fraction (float): Fraction in [0, 1].

    Returns:
        int: The guarded floor, clipped to [0, n].
    """
    return min(n, max(0, math.floor(n * fraction + FLOOR_GUARD)))


def ceil_fraction(n: int, fraction: float) -> int:
    """Compute ceil(n * fraction) with the same guard as floor_fraction."""
    return max(0, math.ceil(n * fraction - FLOOR_GUARD))


def replicate_seed(master_seed: int, n: int, magnitude: float, replicate: int) -> int:
    """
    Derive the seed of one Monte-Carlo replicate.

    The seed depends only on its arguments, so replicates can run in any order and on
    any number of workers.

    Args:
        master_seed (int): Seed of the whole experiment.
        n (int): Sample size of the cell.
        magnitude (float): Break magnitude of the cell.
        replicate (int): Replicate index inside the cell.

    Returns:
        int: A 64-bit seed.
    """
    key = f"{master_seed}:{n}:{magnitude!r}:{replicate}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def config_hash(payload: dict) -> str:
    """Stable short hash of a JSON-serializable config."""
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def mc_standard_error(rate: float, replicates: int) -> float:
    """Binomial standard error of a Monte-Carlo rejection rate."""
    return math.sqrt(rate * (1.0 - rate) / replicates)


def angle_to_threshold(phi: float) -> float:
    """Squared distance 2 - 2cos(phi) between unit functions at angle phi."""
    return 2.0 - 2.0 * math.cos(phi)


def threshold_to_angle(delta: float) -> float:
    """Inverse of angle_to_threshold on [0, 4]."""
    return math.acos(min(1.0, max(-1.0, 1.0 - delta / 2.0)))
