"""Residual-covariance cost functions and their exact derivatives.

Three costs over the same residuals r_t = y_t - F_W(z_t):

* log-det:  U_n(W) = log det Gamma_n(W),  Gamma_n(W) = (1/n) sum r_t r_t^T
* least squares:  (1/n) sum ||r_t||^2
* weighted least squares with a fixed SPD weight:  (1/n) sum r_t^T G^{-1} r_t

The log-det gradient component k is 2 tr(Gamma_n^{-1} A_n(W_k)) with
A_n(W_k) = (1/n) sum (-dF/dW_k r_t^T); it is evaluated as
-(2/n) sum_t (dF/dW_k)^T (Gamma_n^{-1} r_t) so one Cholesky solve against the
stacked residuals covers every component.

The log-det Hessian entry (k,l) is assembled from the displayed averages

    H_kl = -2 tr(G^{-1} A_k G^{-1} A_l) - 2 tr(G^{-1} A_k^T G^{-1} A_l)
           + 2 tr(G^{-1} B_kl) + 2 tr(G^{-1} C_kl)

with B_kl = (1/n) sum (dF/dW_k)(dF/dW_l)^T and
C_kl = (1/n) sum (-r_t (d2F/dW_k dW_l)^T). The sign and the transpose part of
the quadratic A-term follow from d(G^{-1}) = -G^{-1} dG G^{-1} with
dG/dW_l = A_l + A_l^T; the finite-difference oracle in the test suite pins
this form down (a +4 tr(G^{-1}A_k G^{-1}A_l) variant fails it by ~1e-1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mlp
from .errors import DimensionMismatch, NotPositiveDefinite, SingularCovariance
from .mlp import ParamVector
from .spd import SpdMatrix

__all__ = [
    "Dataset",
    "DerivBundle",
    "CostKind",
    "LogDet",
    "Ols",
    "Gls",
    "residuals",
    "empirical_cov",
    "fallback_jitter",
    "cost",
    "a_matrix",
    "b_matrix",
    "c_matrix",
    "gradient",
    "hessian",
    "hessian_terms",
    "evaluate",
]


@dataclass(frozen=True)
class Dataset:
    """Paired regression samples: inputs row t is z_t, targets row t is y_t."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if z.ndim != 2 or y.ndim != 2:
            raise DimensionMismatch("inputs and targets must be 2-d arrays")
        if z.shape[0] != y.shape[0]:
            raise DimensionMismatch(
                f"row counts differ: {z.shape[0]} inputs vs {y.shape[0]} targets"
            )
        if z.shape[0] < 1:
            raise DimensionMismatch("need at least one sample")
        z = z.copy()
        y = y.copy()
        z.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", z)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def output_dim(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True)
class DerivBundle:
    """Cost value with its derivatives at one parameter point."""

    cost: float
    gradient: np.ndarray
    hessian: np.ndarray | None = None


class CostKind:
    """Marker base for the three cost variants."""

    __slots__ = ()


@dataclass(frozen=True)
class LogDet(CostKind):
    """log det of the empirical residual covariance."""


@dataclass(frozen=True)
class Ols(CostKind):
    """Mean squared residual norm."""


@dataclass(frozen=True)
class Gls(CostKind):
    """Residual quadratic form under a fixed SPD weight matrix."""

    weight: SpdMatrix

    def __post_init__(self) -> None:
        w = self.weight
        if not isinstance(w, SpdMatrix):
            # SpdMatrix construction raises NotPositiveDefinite for bad input
            object.__setattr__(self, "weight", SpdMatrix(np.asarray(w)))


def _check_shapes(w: ParamVector, data: Dataset) -> None:
    if data.inputs.shape[1] != w.arch.input_dim:
        raise DimensionMismatch(
            f"dataset has {data.inputs.shape[1]} input columns, "
            f"network expects {w.arch.input_dim}"
        )
    if data.targets.shape[1] != w.arch.output_dim:
        raise DimensionMismatch(
            f"dataset has {data.targets.shape[1]} target columns, "
            f"network produces {w.arch.output_dim}"
        )


def residuals(w: ParamVector, data: Dataset) -> np.ndarray:
    """Row t is y_t - F_W(z_t); shape (n, d)."""
    _check_shapes(w, data)
    return data.targets - mlp.forward(w, data.inputs)


def empirical_cov(resid: np.ndarray, jitter: float = 0.0) -> SpdMatrix:
    """(1/n) sum r_t r_t^T + jitter * I, as an SpdMatrix.

    Raises SingularCovariance when the Cholesky factorization fails even with
    the jitter applied (exact interpolation, or n <= d).
    """
    r = np.asarray(resid, dtype=np.float64)
    if r.ndim != 2 or r.shape[0] < 1:
        raise DimensionMismatch("residuals must be a nonempty (n, d) array")
    if jitter < 0:
        raise DimensionMismatch("jitter must be nonnegative")
    n, d = r.shape
    gamma = r.T @ r / n
    if jitter:
        gamma = gamma + jitter * np.eye(d)
    try:
        return SpdMatrix(gamma)
    except NotPositiveDefinite as exc:
        raise SingularCovariance(
            f"residual covariance is singular (n={n}, d={d}, jitter={jitter:g})"
        ) from exc


def fallback_jitter(resid: np.ndarray) -> float:
    """Retry jitter for a singular residual covariance:
    1e-8 * tr(Gamma_n) / d, computed without factorizing."""
    r = np.asarray(resid, dtype=np.float64)
    n, d = r.shape
    return 1e-8 * float(np.sum(r * r)) / n / d


def _logdet_cov(w: ParamVector, data: Dataset, jitter: float) -> tuple[np.ndarray, SpdMatrix]:
    if data.n <= data.output_dim:
        raise SingularCovariance(
            f"log-det cost needs n > d, got n={data.n}, d={data.output_dim}"
        )
    r = residuals(w, data)
    return r, empirical_cov(r, jitter)


def cost(kind: CostKind, w: ParamVector, data: Dataset, jitter: float = 0.0) -> float:
    """Evaluate one cost variant at W."""
    if isinstance(kind, LogDet):
        _, gamma = _logdet_cov(w, data, jitter)
        return gamma.logdet()
    r = residuals(w, data)
    if isinstance(kind, Ols):
        return float(np.sum(r * r)) / data.n
    if isinstance(kind, Gls):
        return float(np.sum(r * kind.weight.solve(r.T).T)) / data.n
    raise TypeError(f"unknown cost kind {kind!r}")


def a_matrix(w: ParamVector, data: Dataset, k: int) -> np.ndarray:
    """A_n(W_k) = (1/n) sum_t ( -dF/dW_k r_t^T ), a d x d matrix."""
    r = residuals(w, data)
    jac = mlp.jacobian(w, data.inputs)
    mlp._check_index(w, k)
    g = jac[:, k, :]
    return -(g.T @ r) / data.n


def b_matrix(w: ParamVector, data: Dataset, k: int, l: int) -> np.ndarray:
    """B_n(W_k, W_l) = (1/n) sum_t dF/dW_k (dF/dW_l)^T."""
    jac = mlp.jacobian(w, data.inputs)
    mlp._check_index(w, k)
    mlp._check_index(w, l)
    return (jac[:, k, :].T @ jac[:, l, :]) / data.n


def c_matrix(w: ParamVector, data: Dataset, k: int, l: int) -> np.ndarray:
    """C_n(W_k, W_l) = (1/n) sum_t ( -r_t (d2F/dW_k dW_l)^T )."""
    r = residuals(w, data)
    h = mlp.second_derivative(w, data.inputs, k, l)
    return -(r.T @ h) / data.n


def _weighted_gradient(jac: np.ndarray, scaled_resid: np.ndarray, n: int) -> np.ndarray:
    return -(2.0 / n) * np.einsum("npd,nd->p", jac, scaled_resid)


def gradient(kind: CostKind, w: ParamVector, data: Dataset, jitter: float = 0.0) -> np.ndarray:
    """Exact gradient of cost() with respect to the flat parameter vector."""
    _check_shapes(w, data)
    jac = mlp.jacobian(w, data.inputs)
    if isinstance(kind, LogDet):
        r, gamma = _logdet_cov(w, data, jitter)
        return _weighted_gradient(jac, gamma.solve(r.T).T, data.n)
    r = residuals(w, data)
    if isinstance(kind, Ols):
        return _weighted_gradient(jac, r, data.n)
    if isinstance(kind, Gls):
        return _weighted_gradient(jac, kind.weight.solve(r.T).T, data.n)
    raise TypeError(f"unknown cost kind {kind!r}")


def _a_stack(jac: np.ndarray, r: np.ndarray, n: int) -> np.ndarray:
    """All A_n(W_k) at once, shape (p, d, d)."""
    return -np.einsum("npd,ne->pde", jac, r) / n


def hessian_terms(
    w: ParamVector, data: Dataset, jitter: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three p x p pieces of the log-det Hessian, unsymmetrized:

    quadratic A-term, B-term, C-term (see module docstring). Their sum is
    the raw Hessian; :func:`hessian` symmetrizes it.
    """
    _check_shapes(w, data)
    n, d = data.n, data.output_dim
    p = len(w)
    r, gamma = _logdet_cov(w, data, jitter)
    jac = mlp.jacobian(w, data.inputs)

    a = _a_stack(jac, r, n)
    # ginv_a[k] = Gamma^{-1} A_k, ginv_at[k] = Gamma^{-1} A_k^T, via one solve each
    ginv_a = gamma.solve(a.transpose(1, 0, 2).reshape(d, p * d)).reshape(d, p, d).transpose(1, 0, 2)
    ginv_at = gamma.solve(a.transpose(2, 0, 1).reshape(d, p * d)).reshape(d, p, d).transpose(1, 0, 2)
    term_a = -2.0 * (
        np.einsum("kab,lba->kl", ginv_a, ginv_a)
        + np.einsum("kab,lba->kl", ginv_at, ginv_a)
    )

    ginv_jac = gamma.solve(jac.reshape(n * p, d).T).T.reshape(n, p, d)
    term_b = (2.0 / n) * np.einsum("nkd,nld->kl", jac, ginv_jac)

    # C-term: -(2/n) sum_t (d2F)^T Gamma^{-1} r_t, pair by pair; both indices
    # in the affine output layer give an exactly zero second derivative
    scaled = gamma.solve(r.T).T
    out_start = w.arch.layer_blocks()[-1][0].start
    term_c = np.zeros((p, p))
    for k in range(p):
        for l in range(k, p):
            if k >= out_start and l >= out_start:
                continue
            h = mlp.second_derivative(w, data.inputs, k, l)
            v = -(2.0 / n) * float(np.einsum("nd,nd->", h, scaled))
            term_c[k, l] = v
            term_c[l, k] = v
    return term_a, term_b, term_c


def hessian(kind: CostKind, w: ParamVector, data: Dataset, jitter: float = 0.0) -> np.ndarray:
    """Exact Hessian of the log-det cost, symmetrized as (H + H^T)/2.

    Only the log-det cost has an analytic Hessian here; the baselines are
    fitted with quasi-Newton updates and never need one.
    """
    if not isinstance(kind, LogDet):
        raise NotImplementedError("analytic Hessian is available for the log-det cost only")
    term_a, term_b, term_c = hessian_terms(w, data, jitter)
    h = term_a + term_b + term_c
    return (h + h.T) / 2.0


def evaluate(
    kind: CostKind,
    w: ParamVector,
    data: Dataset,
    want_hessian: bool = False,
    jitter: float = 0.0,
) -> DerivBundle:
    """Cost and gradient (optionally the Hessian) sharing one covariance
    factorization."""
    _check_shapes(w, data)
    jac = mlp.jacobian(w, data.inputs)
    if isinstance(kind, LogDet):
        r, gamma = _logdet_cov(w, data, jitter)
        val = gamma.logdet()
        grad = _weighted_gradient(jac, gamma.solve(r.T).T, data.n)
    elif isinstance(kind, Ols):
        r = residuals(w, data)
        val = float(np.sum(r * r)) / data.n
        grad = _weighted_gradient(jac, r, data.n)
    elif isinstance(kind, Gls):
        r = residuals(w, data)
        scaled = kind.weight.solve(r.T).T
        val = float(np.sum(r * scaled)) / data.n
        grad = _weighted_gradient(jac, scaled, data.n)
    else:
        raise TypeError(f"unknown cost kind {kind!r}")
    hess = None
    if want_hessian:
        hess = hessian(kind, w, data, jitter)
    return DerivBundle(val, grad, hess)
