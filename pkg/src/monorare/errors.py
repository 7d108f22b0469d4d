"""Exception hierarchy shared by all monorare modules."""

from __future__ import annotations


class MonorareError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(MonorareError, ValueError):
    pass


class SeparabilityViolation(MonorareError):
    """A point is both failure- and safety-dominated.

    This can only happen if the evaluated function is not monotone, i.e.
    the working assumptions on ``g`` are broken.
    """


class InitFailed(MonorareError):
    def __init__(self, message: str, lower: float, upper: float):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class RejectionBudgetExceeded(MonorareError):
    pass


class EstimationError(MonorareError):
    pass


class BracketError(EstimationError, ValueError):
    pass


class BoundaryEstimate(EstimationError):
    """The likelihood has no interior maximiser; ``boundary`` holds the bound
    where it peaks."""

    def __init__(self, message: str, boundary: float):
        super().__init__(message)
        self.boundary = boundary


class DegenerateSignatures(BoundaryEstimate):
    """All signatures are equal, so the likelihood is monotone."""


class TrainingDiverged(MonorareError):
    pass


class ConfigError(MonorareError, ValueError):
    pass
