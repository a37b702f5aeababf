"""Exception types raised across the package."""

from __future__ import annotations


class DcvarError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DcvarError):
    """Market input arrays disagree in length."""


class NotPositiveDefinite(DcvarError):
    """Covariance factorization hit a non-positive pivot."""


class OutOfHorizon(DcvarError):
    """A time argument lies outside [0, T]."""


class DomainError(DcvarError):
    """An argument lies outside the mathematical domain of the function."""


class InfeasibleSpec(DcvarError):
    """The wealth cap is unreachable under the budget (w0 / B >= E[Z])."""


class InfeasibleDelta(DcvarError):
    """A lower-threshold value left the admissible bracket."""


class InfeasibleK(DcvarError):
    """The risk budget K lies outside [K_lower, K_upper] for this alpha."""


class DegenerateVol(DcvarError):
    """The remaining state-price volatility is too small for the allocation closed form."""


class NoFeasibleAlpha(DcvarError):
    """The feasibility scan over alpha found no point admitting the risk budget.

    Carries the range of risk budgets seen over the scanned alpha grid so
    callers can report which K values would have been feasible.
    """

    def __init__(self, message: str, k_lower_min: float | None = None,
                 k_upper_max: float | None = None):
        super().__init__(message)
        self.k_lower_min = k_lower_min
        self.k_upper_max = k_upper_max


class EmptySample(DcvarError):
    """Terminal statistics requested on an empty sample."""


class NoFeasibleGridPoint(DcvarError):
    """The brute-force grid search found no feasible threshold pair."""


class ConfigError(DcvarError):
    """A run configuration file is missing fields or fails validation."""
