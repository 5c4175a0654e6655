"""Multivariate nonlinear regression fitted by minimizing the log-determinant
of the empirical residual covariance.

The package estimates W in Y = F_W(Z) + noise, where F_W is a small
feed-forward network and the noise has an unknown covariance. Minimizing
log det of the empirical residual covariance matches the efficiency of
generalized least squares with the true covariance, without knowing it.

Layout:

- ``spd``          SPD matrix helpers on Cholesky factorizations.
- ``mlp``          network architecture, forward pass, analytic derivatives.
- ``cost``         the log-det, OLS, and GLS costs with exact gradient/Hessian.
- ``optimize``     BFGS / damped-Newton minimization with restarts.
- ``sampling``     seeded data generation and covariance families.
- ``asymptotics``  information matrix, limit checks, Monte Carlo comparison.
- ``reporting``    canonical JSON/CSV serialization (17 significant digits).
- ``cli``          the ``logdetfit`` command line front end.
"""

__version__ = "0.1.0"

from .errors import (
    AllRestartsFailed,
    ConfigError,
    DimensionMismatch,
    EstimationError,
    IndexOutOfRange,
    LineSearchBreakdown,
    NotPositiveDefinite,
    SingularCovariance,
)
from .spd import SpdMatrix, cholesky, trace_product
from .mlp import Architecture, ParamVector, forward, init_random, jacobian, pack, unpack
# note: the cost/gradient/hessian callables live in the `cost` submodule and
# are not re-exported here because the bare name `cost` would shadow that
# submodule on the package object
from .cost import CostKind, Dataset, Gls, LogDet, Ols
from .optimize import FitConfig, FitReport, minimize
from .sampling import GenSpec, NoiseSpec, make_gamma0, sample_dataset, substream
from .asymptotics import (
    InfoMatrix,
    McReport,
    ScoreCltReport,
    estimate_i0,
    reference_i0,
    run_comparison,
    verify_hessian_limit,
    verify_score_clt,
)

__all__ = [
    "__version__",
    "AllRestartsFailed",
    "ConfigError",
    "DimensionMismatch",
    "EstimationError",
    "IndexOutOfRange",
    "LineSearchBreakdown",
    "NotPositiveDefinite",
    "SingularCovariance",
    "SpdMatrix",
    "cholesky",
    "trace_product",
    "Architecture",
    "ParamVector",
    "forward",
    "init_random",
    "jacobian",
    "pack",
    "unpack",
    "CostKind",
    "Dataset",
    "Gls",
    "LogDet",
    "Ols",
    "FitConfig",
    "FitReport",
    "minimize",
    "GenSpec",
    "NoiseSpec",
    "make_gamma0",
    "sample_dataset",
    "substream",
    "InfoMatrix",
    "McReport",
    "ScoreCltReport",
    "estimate_i0",
    "reference_i0",
    "run_comparison",
    "verify_hessian_limit",
    "verify_score_clt",
]
