"""Local minimization of the cost functions over the flat weight vector.

The workhorse is a dense BFGS iteration with Armijo backtracking; a damped
Newton method using the analytic log-det Hessian is available when the extra
curvature is worth its price. Both run under a multi-start policy (the costs
are multimodal) or from a caller-supplied warm start, which is the documented
mode for asymptotic experiments: the theory describes the local minimum near
the true weights, and hopping between label-switching symmetric minima would
corrupt covariance statistics.

Failure handling: a singular residual covariance triggers one retry of the
restart with a small diagonal jitter proportional to the residual scale;
anything that still fails is logged per restart, and only when every restart
failed does the caller see an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from . import cost as costs
from .cost import CostKind, Dataset, LogDet
from .errors import (
    AllRestartsFailed,
    DimensionMismatch,
    EstimationError,
    LineSearchBreakdown,
    SingularCovariance,
)
from .mlp import Architecture, ParamVector, init_random
from .sampling import STREAM_RESTARTS, substream

__all__ = [
    "FitConfig",
    "FitReport",
    "minimize",
    "line_search",
    "damp_hessian",
    "damp_until_pd",
]

QUASI_NEWTON = "quasi_newton"
DAMPED_NEWTON = "damped_newton"

ARMIJO_C1 = 1e-4
BACKTRACK_FACTOR = 0.5
MAX_HALVINGS = 40
CURVATURE_SKIP = 1e-10
DAMPING_FLOOR = 1e-6
DAMPING_CEILING = 1e6


@dataclass(frozen=True)
class FitConfig:
    """Solver policy. grad_tol is a sup-norm test on the gradient; cost_tol
    is a relative-decrease test per accepted step (the log-det cost flattens
    near interpolation, where the gradient alone can stall)."""

    method: str = QUASI_NEWTON
    grad_tol: float = 1e-6
    cost_tol: float = 1e-10
    max_iters: int = 5000
    restarts: int = 10
    seed: int = 0
    warm_start: ParamVector | None = None

    def __post_init__(self) -> None:
        if self.method not in (QUASI_NEWTON, DAMPED_NEWTON):
            raise DimensionMismatch(f"unknown method {self.method!r}")
        if self.grad_tol <= 0 or self.cost_tol <= 0:
            raise DimensionMismatch("tolerances must be positive")
        if self.max_iters < 1 or self.restarts < 1:
            raise DimensionMismatch("max_iters and restarts must be at least 1")


@dataclass(frozen=True)
class FitReport:
    """Outcome of minimize(): the best run and how it ended."""

    w_hat: ParamVector
    final_cost: float
    grad_norm: float
    iterations: int
    converged: bool
    restarts_used: int
    failure_log: list[str] = field(default_factory=list)


def damp_hessian(h: np.ndarray, lam: float) -> np.ndarray:
    """H + lam * I."""
    if lam < 0:
        raise DimensionMismatch("damping must be nonnegative")
    return h + lam * np.eye(h.shape[0])


def damp_until_pd(h: np.ndarray) -> tuple[np.ndarray | None, float]:
    """Smallest damping from the ladder {0, 1e-6, 1e-5, ..., 1e6} making
    H + lam I positive definite; returns (Cholesky factor, lam), or
    (None, inf) when even the ceiling fails and the caller should fall back
    to the gradient direction."""
    lam = 0.0
    while True:
        try:
            return np.linalg.cholesky(damp_hessian(h, lam)), lam
        except np.linalg.LinAlgError:
            pass
        if lam >= DAMPING_CEILING:
            return None, np.inf
        lam = DAMPING_FLOOR if lam == 0.0 else lam * 10.0


def line_search(cost_fn, grad_fn, w: ParamVector, direction: np.ndarray) -> float:
    """Armijo backtracking: c1 = 1e-4, halving from step 1.0, at most 40
    halvings. Raises LineSearchBreakdown for a non-descent direction or when
    no acceptable step exists (noise floor)."""
    direction = np.asarray(direction, dtype=np.float64)
    slope = float(np.asarray(grad_fn(w)) @ direction)
    base = float(cost_fn(w))
    step, _ = _backtrack(
        lambda vals: float(cost_fn(w.with_values(vals))), w.values, direction, base, slope
    )
    return step


def _backtrack(cost_at, values, direction, base_cost, slope):
    """Shared Armijo loop over raw arrays; returns (step, new cost)."""
    if not np.isfinite(slope) or slope >= 0.0:
        raise LineSearchBreakdown(f"not a descent direction (slope {slope:g})")
    step = 1.0
    for _ in range(MAX_HALVINGS + 1):
        try:
            trial = cost_at(values + step * direction)
        except SingularCovariance:
            trial = np.inf
        if np.isfinite(trial) and trial <= base_cost + ARMIJO_C1 * step * slope:
            return step, trial
        step *= BACKTRACK_FACTOR
    raise LineSearchBreakdown(
        f"no sufficient decrease within {MAX_HALVINGS} halvings (cost {base_cost:g})"
    )


def _run_single(kind, data, start: ParamVector, cfg: FitConfig, jitter: float):
    """One descent run from one start. Returns (w, cost, grad_norm,
    iterations, converged)."""
    w = start
    bundle = costs.evaluate(kind, w, data, jitter=jitter)
    cost_now = bundle.cost
    grad = bundle.gradient
    inv_h = np.eye(len(w))
    first_update = True
    stall_streak = 0
    newton = cfg.method == DAMPED_NEWTON

    def cost_at(vals):
        return costs.cost(kind, w.with_values(vals), data, jitter=jitter)

    for it in range(1, cfg.max_iters + 1):
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= cfg.grad_tol:
            return w, cost_now, grad_norm, it - 1, True

        if newton:
            hess = costs.evaluate(kind, w, data, want_hessian=True, jitter=jitter).hessian
            factor, _ = damp_until_pd(hess)
            direction = -grad if factor is None else -cho_solve((factor, True), grad)
        else:
            direction = -inv_h @ grad
        slope = float(grad @ direction)
        if slope >= 0.0:
            # stale curvature; restart the quasi-Newton model from steepest descent
            inv_h = np.eye(len(w))
            direction = -grad
            slope = float(grad @ direction)

        step, cost_new = _backtrack(cost_at, w.values, direction, cost_now, slope)
        w_new = w.with_values(w.values + step * direction)
        grad_new = costs.evaluate(kind, w_new, data, jitter=jitter).gradient

        if not newton:
            s = w_new.values - w.values
            y = grad_new - grad
            ys = float(y @ s)
            if ys > CURVATURE_SKIP * np.linalg.norm(y) * np.linalg.norm(s):
                if first_update:
                    # calibrate the initial model to the observed curvature
                    # scale before the first update (Nocedal-Wright 6.20)
                    inv_h = np.eye(len(w)) * (ys / float(y @ y))
                    first_update = False
                rho = 1.0 / ys
                outer = np.outer(s, y) * rho
                eye = np.eye(len(w))
                inv_h = (eye - outer) @ inv_h @ (eye - outer.T) + np.outer(s, s) * rho

        rel_drop = (cost_now - cost_new) / max(1.0, abs(cost_now))
        w, cost_now, grad = w_new, cost_new, grad_new
        # a single undersized step early on is not convergence; demand a
        # sustained stall before stopping on the cost criterion
        stall_streak = stall_streak + 1 if rel_drop <= cfg.cost_tol else 0
        if stall_streak >= 3:
            return w, cost_now, float(np.max(np.abs(grad))), it, True

    return w, cost_now, float(np.max(np.abs(grad))), cfg.max_iters, False


def _starts(arch: Architecture, cfg: FitConfig):
    for i in range(cfg.restarts):
        if i == 0 and cfg.warm_start is not None:
            yield cfg.warm_start
        else:
            yield init_random(arch, substream(cfg.seed, STREAM_RESTARTS, i))


def minimize(kind: CostKind, data: Dataset, arch: Architecture, cfg: FitConfig) -> FitReport:
    """Best local minimizer over the configured restarts.

    Restart 0 is the warm start when one is given; the rest draw random
    initial weights from substreams of cfg.seed. The winner is the lowest
    final cost among converged runs (ties to the earliest restart);
    non-converged runs are used only if nothing converged. Raises
    AllRestartsFailed when every restart errored out.
    """
    if cfg.warm_start is not None and cfg.warm_start.arch != arch:
        raise DimensionMismatch("warm start architecture differs from the requested one")
    failures: list[str] = []
    best = None
    for i, start in enumerate(_starts(arch, cfg)):
        jitter = 0.0
        while True:
            try:
                w, c, gnorm, iters, conv = _run_single(kind, data, start, cfg, jitter)
            except SingularCovariance as exc:
                if jitter == 0.0 and isinstance(kind, LogDet):
                    jitter = fallback = costs.fallback_jitter(costs.residuals(start, data))
                    if fallback > 0.0:
                        continue
                failures.append(f"restart {i}: {type(exc).__name__}: {exc}")
                break
            except EstimationError as exc:
                failures.append(f"restart {i}: {type(exc).__name__}: {exc}")
                break
            key = (not conv, c, i)
            if best is None or key < best[0]:
                best = (key, w, c, gnorm, iters, conv)
            break
    if best is None:
        raise AllRestartsFailed(
            f"all {cfg.restarts} restarts failed; first: {failures[0]}", failures
        )
    _, w, c, gnorm, iters, conv = best
    return FitReport(w, c, gnorm, iters, conv, cfg.restarts, failures)
