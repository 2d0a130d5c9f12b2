# File: utils/errors.py


class RelevantChangeError(ValueError):
    """Base class for every error raised by the library."""


class DimensionError(RelevantChangeError):
    """Shapes or grid sizes of the operands do not match."""


class InvalidOrderError(RelevantChangeError):
    """Fourier basis order is not a positive odd integer."""


class ResolutionError(RelevantChangeError):
    """Grid too coarse for the requested basis order."""


class ProjectionError(RelevantChangeError):
    """Least-squares projection is underdetermined or rank deficient."""


class NormalizationError(RelevantChangeError):
    """A function expected to have unit norm does not."""


class SymmetryError(RelevantChangeError):
    """A covariance kernel is not symmetric within tolerance."""


class ChangePointError(RelevantChangeError):
    """Invalid arguments to the change-point estimator."""


class PivotError(RelevantChangeError):
    """Invalid pivot simulation arguments or an unusable quantile cache."""


class ConfigError(RelevantChangeError):
    """Configuration failed validation."""


class IngestError(RelevantChangeError):
    """Daily CSV could not be ingested."""

    def __init__(self, message: str, line_numbers: list[int] | None = None):
        self.line_numbers = list(line_numbers or [])
        if self.line_numbers:
            shown = ", ".join(str(n) for n in self.line_numbers[:10])
            more = "" if len(self.line_numbers) <= 10 else f" (+{len(self.line_numbers) - 10} more)"
            message = f"{message} at line(s) {shown}{more}"
        super().__init__(message)


class ExperimentError(RelevantChangeError):
    """A Monte-Carlo replicate failed."""

    def __init__(self, message: str, replicate: int, seed: int):
        self.message = message
        self.replicate = replicate
        self.seed = seed
        super().__init__(f"{message} (replicate {replicate}, seed {seed})")

    def __reduce__(self):
        return self.__class__, (self.message, self.replicate, self.seed)
