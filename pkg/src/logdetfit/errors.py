"""Exception types shared across the package.

Every numerical failure mode is an explicit exception; no routine returns
NaN-poisoned values. Callers that run many replications catch these to count
failures instead of absorbing bad numbers.
"""


class EstimationError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(EstimationError, ValueError):
    """Operands have incompatible shapes."""


class NotPositiveDefinite(EstimationError, ValueError):
    """A matrix required to be symmetric positive definite is not."""


class SingularCovariance(EstimationError, ValueError):
    """The empirical residual covariance is singular (e.g. exact
    interpolation, or fewer samples than output dimensions)."""


class IndexOutOfRange(EstimationError, IndexError):
    """A parameter index is outside [0, param_count)."""


class LineSearchBreakdown(EstimationError, RuntimeError):
    """Backtracking exhausted its halvings without satisfying the
    sufficient-decrease condition (non-descent direction or noise floor)."""


class AllRestartsFailed(EstimationError, RuntimeError):
    """Every optimizer restart ended in an error; no usable fit."""

    def __init__(self, message, failure_log=None):
        super().__init__(message)
        self.failure_log = list(failure_log or [])


class ConfigError(EstimationError, ValueError):
    """An experiment configuration file is invalid."""
