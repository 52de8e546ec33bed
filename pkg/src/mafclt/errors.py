"""Exception types shared across the package."""


class MafcltError(Exception):
    """Base class for all package errors."""


class DomainError(MafcltError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(MafcltError, ValueError):
    """An invalid model or experiment configuration."""


class EstimationError(MafcltError):
    """An empirical estimate cannot be formed from the given data."""


class SandwichIndeterminate(MafcltError):
    """The partial-sum ratio check is undefined because the total sum is zero.

    Raised instead of returning False so callers can distinguish "violated"
    from "not defined".
    """


class ResolutionError(MafcltError):
    """Two step paths have no common refinement grid of tractable size."""


class QuadratureError(MafcltError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
