"""Exception and warning types shared across the package.

The CLI maps these onto process exit codes (config 2, solver 3, resolution 4).
"""


class LevyFKError(Exception):
    """Base class for package errors."""


class ConfigError(LevyFKError, ValueError):
    """Invalid model, problem or run configuration."""


class SolverError(LevyFKError, RuntimeError):
    """A numerical solver failed (instability, shooting failure, ...)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class ResolutionError(LevyFKError, ValueError):
    """The requested grid cannot resolve the problem at this hbar."""


class RangeError(LevyFKError, ValueError):
    """Argument outside the numerically safe range of a function."""


class DegenerateError(LevyFKError, ArithmeticError):
    """A ratio estimator has a vanishing denominator."""


class BoundaryTruncationWarning(UserWarning):
    """A nonlocal shift left the computational grid and was truncated to zero."""


class AdmissibilityWarning(UserWarning):
    """A rate function does not meet the growth conditions of the FK theorems."""
