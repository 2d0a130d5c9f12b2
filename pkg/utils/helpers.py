# File: utils/helpers.py

import math
import re
from pathlib import Path

import toml

from utils.errors import ConfigError

TEST_KINDS = ("eigenvalue", "eigenfunction")
DEPENDENCE_KINDS = ("iid", "fma1")
INNOVATION_KINDS = ("gaussian", "student_t")
SIGNIFICANCE_LEVELS = (0.99, 0.95, 0.90)
TEST_MODES = ("relevant", "equivalence")

_ANGLE_PATTERN = re.compile(r"^\s*(?:(\d+(?:\.\d*)?)\s*\*?\s*)?pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(value) -> float:
    """
    Parse an angle given as a number or as text like "pi/16" or "2*pi/5".

    Args:
        value: Number or string.

    Returns:
        float: The angle in radians.
    """
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower()
    match = _ANGLE_PATTERN.match(text)
    if match:
        factor = float(match.group(1)) if match.group(1) else 1.0
        divisor = float(match.group(2)) if match.group(2) else 1.0
        return factor * math.pi / divisor
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"angle: cannot parse {value!r}") from None


def format_angle(phi: float) -> str:
    """Format an angle as a fraction of pi when it is one."""
    for den in range(1, 65):
        num = phi * den / math.pi
        if abs(num - round(num)) < 1e-9 and round(num) != 0:
            num = int(round(num))
            head = "pi" if num == 1 else f"{num}pi"
            return head if den == 1 else f"{head}/{den}"
    return f"{phi:.6g}"


def significance_class(p_value: float) -> str:
    """Superscript class of a rejection: the largest level exceeded by P(W <= ratio)."""
    for level in SIGNIFICANCE_LEVELS:
        if p_value > level:
            return f">{level:.0%}"
    return ""


def format_relevance_cell(rejected: bool, p_value: float) -> str:
    """TRUE for a retained null, FALSE^{>xx%} for a rejection."""
    if not rejected:
        return "TRUE"
    label = significance_class(p_value)
    return f"FALSE^{{{label}}}" if label else "FALSE"


def load_config(path: str | Path) -> dict:
    """Load a TOML config file."""
    try:
        return toml.load(str(path))
    except (toml.TomlDecodeError, TypeError) as e:
        raise ConfigError(f"{path}: {e}") from e


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_count(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_experiment_data(section: dict) -> tuple[bool, str]:
    """
    Validate the [experiment] table of a config file.

    Args:
        section (dict): The parsed [experiment] table.

    Returns:
        tuple[bool, str]: A tuple containing a boolean indicating if the data is valid,
                          and a string with an error message if not valid.
    """
    kind = section.get("test_kind")
    if kind not in TEST_KINDS:
        return False, f"test_kind: unknown value {kind!r}; valid kinds are {', '.join(TEST_KINDS)}"
    mode = section.get("mode", "relevant")
    if mode not in TEST_MODES:
        return False, f"mode: unknown value {mode!r}; valid modes are {', '.join(TEST_MODES)}"
    for key in ("j", "replicates", "K", "T", "pivot_replicates", "seed", "pivot_seed", "bins"):
        if key in section and not _is_count(section[key]):
            return False, f"{key}: must be an integer"
    for key in ("delta", "alpha", "epsilon", "theta0", "df"):
        if key in section and not _is_number(section[key]):
            return False, f"{key}: must be a number"
    if section.get("j", 1) < 1:
        return False, "j: must be a positive integer"
    magnitudes = section.get("magnitudes")
    if magnitudes is not None:
        if not isinstance(magnitudes, list) or not magnitudes:
            return False, "magnitudes: grid must not be empty"
        if kind == "eigenvalue" and not all(_is_number(m) for m in magnitudes):
            return False, "magnitudes: eigenvalue-shift magnitudes must be numbers"
        if kind == "eigenfunction":
            try:
                magnitudes = [parse_angle(m) for m in magnitudes]
            except ConfigError as e:
                return False, f"magnitudes: {e}"
    sizes = section.get("sample_sizes")
    if not isinstance(sizes, list) or not sizes:
        return False, "sample_sizes: list must not be empty"
    if any(not _is_count(n) or n < 4 for n in sizes):
        return False, "sample_sizes: every N must be an integer >= 4"
    if section.get("replicates", 1) < 1:
        return False, "replicates: must be >= 1"
    if section.get("delta", 0.0) < 0:
        return False, "delta: must be >= 0"
    if not 0 < section.get("alpha", 0.05) < 1:
        return False, "alpha: must lie in (0, 1)"
    if not 0 <= section.get("epsilon", 0.05) < 0.5:
        return False, "epsilon: must lie in [0, 0.5)"
    if not 0 < section.get("theta0", 0.5) < 1:
        return False, "theta0: must lie in (0, 1)"
    if section.get("df", 5.0) <= 2:
        return False, "df: must be > 2"
    if section.get("K", 20) < 2:
        return False, "K: must be >= 2"
    if section.get("pivot_replicates", 1) < 1:
        return False, "pivot_replicates: must be >= 1"
    if section.get("dependence", "iid") not in DEPENDENCE_KINDS:
        return False, f"dependence: valid values are {', '.join(DEPENDENCE_KINDS)}"
    if section.get("innovations", "gaussian") not in INNOVATION_KINDS:
        return False, f"innovations: valid values are {', '.join(INNOVATION_KINDS)}"
    T = section.get("T", 21)
    if T < 1 or T % 2 == 0:
        return False, "T: must be a positive odd integer"
    if kind == "eigenvalue" and magnitudes is not None and any(not 0 <= m <= 1 for m in magnitudes):
        return False, "magnitudes: eigenvalue-shift magnitudes E must lie in [0, 1]"
    if "epsilons" in section:
        epsilons = section["epsilons"]
        if not isinstance(epsilons, list) or not epsilons:
            return False, "epsilons: list must not be empty"
        if any(not _is_number(e) or not 0 <= e < 0.5 for e in epsilons):
            return False, "epsilons: every trim must be a number in [0, 0.5)"
    return True, ""


def validate_analysis_data(section: dict) -> tuple[bool, str]:
    """Validate the [analysis] table of a config file."""
    for key in ("T", "min_days", "K", "pivot_replicates", "seed"):
        if key in section and not _is_count(section[key]):
            return False, f"{key}: must be an integer"
    if "epsilon" in section and not _is_number(section["epsilon"]):
        return False, "epsilon: must be a number"
    T = section.get("T", 41)
    if T < 1 or T % 2 == 0:
        return False, "T: must be a positive odd integer"
    if not 0 <= section.get("epsilon", 0.01) < 0.5:
        return False, "epsilon: must lie in [0, 0.5)"
    for key in ("angles", "j_fun", "j_val", "divisors", "alphas"):
        if key in section and (not isinstance(section[key], (list, tuple)) or not section[key]):
            return False, f"{key}: list must not be empty"
    for key in ("divisors", "alphas"):
        if not all(_is_number(v) for v in section.get(key, [])):
            return False, f"{key}: every entry must be a number"
    if any(d <= 0 for d in section.get("divisors", [])):
        return False, "divisors: must be positive"
    if any(not 0 < a < 1 for a in section.get("alphas", [])):
        return False, "alphas: every level must lie in (0, 1)"
    if any(not _is_count(j) or j < 1 for j in list(section.get("j_fun", [])) + list(section.get("j_val", []))):
        return False, "j_fun/j_val: indices must be positive integers"
    return True, ""
