"""Exception hierarchy for the laboratory.

Every error raised by this package derives from InlsLabError so callers can
catch the whole family.  The CLI maps subtrees onto process exit codes
(validation -> 1, solver -> 2, I/O -> 3, failed verification -> 4).
"""


class InlsLabError(Exception):
    """Base class for all package errors."""


class ValidationError(InlsLabError):
    """Invalid parameters, grids, fields or configuration values."""


class ConfigError(ValidationError):
    """Malformed or strict-mode-violating run configuration."""


class BlowupSignalError(ValidationError):
    """Non-finite amplitudes encountered where a finite field is required.

    This is the blow-up / under-resolution signal for functional evaluation.
    """


class ResolutionError(ValidationError):
    """An operation would push significant field content off the grid."""


class DomainError(ValidationError):
    """A cutoff profile and a grid are geometrically incompatible."""


class RegimeError(ValidationError):
    """An operation was requested outside its parameter regime."""


class InsufficientDataError(ValidationError):
    """A time series is too short for the requested post-processing."""


class SolverError(InlsLabError):
    """Numerical solver failures (iteration limits, linear-solve breakdown)."""


class ConvergenceError(SolverError):
    """Iteration limit reached before meeting the convergence contract."""

    def __init__(self, message, last_residual=None, iterations=None):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class ConstructionError(InlsLabError):
    """A cutoff profile failed its admissibility certification."""
