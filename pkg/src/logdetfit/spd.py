"""Dense linear algebra for small symmetric positive-definite matrices.

The noise covariances handled here (empirical residual covariance, true noise
covariance, information matrices) are small, so everything is factorized once
with a Cholesky decomposition at construction time and all downstream products
with the inverse go through triangular solves. Explicit inverses are formed
only for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite

__all__ = ["SpdMatrix", "cholesky", "trace_product", "identity"]


def cholesky(matrix: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric matrix.

    Parameters
    ----------
    matrix : (d, d) array
        Symmetric input. Only its exact values are used; no symmetrization
        is applied here (``SpdMatrix`` symmetrizes before calling).

    Returns
    -------
    (d, d) array with ``L @ L.T == matrix`` up to rounding.

    Raises
    ------
    NotPositiveDefinite
        If any pivot is not strictly positive.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise DimensionMismatch("empty matrix")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky pivot failure: {exc}") from exc


@dataclass(frozen=True)
class SpdMatrix:
    """A symmetric positive-definite matrix with its cached Cholesky factor.

    Construction symmetrizes the input via ``(M + M.T) / 2`` (summation order
    in covariance accumulation can break exact symmetry) and factorizes
    immediately, so a successfully constructed value is guaranteed positive
    definite. Instances are immutable and safe to share between threads.
    """

    entries: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
        m = (m + m.T) / 2.0
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        factor = cholesky(m)
        factor.setflags(write=False)
        object.__setattr__(self, "chol", factor)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def logdet(self) -> float:
        """Natural log of the determinant, ``2 * sum(log(diag(chol)))``."""
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``M @ X = rhs`` through the cached factor.

        ``rhs`` may be a vector of length d or a (d, k) matrix.
        """
        b = np.asarray(rhs, dtype=np.float64)
        if b.shape[0] != self.dim:
            raise DimensionMismatch(
                f"rhs has {b.shape[0]} rows, matrix has dimension {self.dim}"
            )
        return cho_solve((self.chol, True), b)

    def inverse(self) -> "SpdMatrix":
        """Explicit inverse, as an ``SpdMatrix``. Reporting only; prefer
        :meth:`solve` in computations."""
        inv = cho_solve((self.chol, True), np.eye(self.dim))
        return SpdMatrix(inv)

    def whiten(self, rows: np.ndarray) -> np.ndarray:
        """Map sample rows x to ``L^{-1} x`` so that whitened rows of an
        N(0, M) sample are standard normal. ``rows`` is (n, d)."""
        b = np.asarray(rows, dtype=np.float64)
        if b.ndim != 2 or b.shape[1] != self.dim:
            raise DimensionMismatch(f"rows must be (n, {self.dim})")
        return solve_triangular(self.chol, b.T, lower=True).T

    def correlate(self, rows: np.ndarray) -> np.ndarray:
        """Map standard-normal rows u to ``L u`` so the result is N(0, M)."""
        b = np.asarray(rows, dtype=np.float64)
        if b.ndim != 2 or b.shape[1] != self.dim:
            raise DimensionMismatch(f"rows must be (n, {self.dim})")
        return b @ self.chol.T

    def to_list(self) -> list[list[float]]:
        return [[float(v) for v in row] for row in self.entries]


def identity(dim: int) -> SpdMatrix:
    return SpdMatrix(np.eye(dim))


def trace_product(a: np.ndarray, b: np.ndarray) -> float:
    """``tr(A @ B)`` without forming the product.

    Satisfies ``trace_product(a, b) == trace_product(b, a)`` up to rounding.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise DimensionMismatch(f"conformable square matrices required, got {a.shape} and {b.shape}")
    return float(np.einsum("ij,ji->", a, b))
