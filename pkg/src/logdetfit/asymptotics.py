"""Monte Carlo verification of the asymptotic theory.

Three limit statements are checked empirically, each against the information
matrix I0 with entries tr(Gamma0^{-1} E[B(W0_k, W0_l)]):

1. the log-det Hessian at the truth converges to 2 I0,
2. the scaled score sqrt(n) grad U_n(W0) is asymptotically N(0, 4 I0),
3. sqrt(n) (W_hat - W0) is asymptotically N(0, I0^{-1}) for the log-det
   estimator, matching the weighted least-squares fit that is handed the
   true noise covariance, while plain least squares is strictly worse
   under correlated noise.

Every replicated fit is warm-started at W0 plus a N(0, 0.01^2) perturbation.
This is the single most consequential harness decision: the theory describes
the local minimum near W0, and the permutation/sign symmetries of the network
would otherwise scatter fitted weights across equivalent minima and corrupt
the covariance statistics. Reports carry this policy explicitly.

Replications draw their seeds from substreams of the experiment seed, so
results are independent of thread count and aggregation order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cost as costs
from . import mlp
from .cost import Dataset, Gls, LogDet, Ols
from .errors import AllRestartsFailed, DimensionMismatch, SingularCovariance
from .mlp import ParamVector
from .optimize import FitConfig, minimize
from .sampling import (
    STREAM_REFERENCE,
    STREAM_REPLICATIONS,
    STREAM_WARMSTART,
    GenSpec,
    derived_seed,
    sample_dataset,
    substream,
)
from .spd import SpdMatrix

__all__ = [
    "WARM_START_SD",
    "N_REFERENCE",
    "ESTIMATOR_NAMES",
    "InfoMatrix",
    "HessianLimitRow",
    "ScoreCltReport",
    "FitRow",
    "EstimatorResult",
    "McSummary",
    "McReport",
    "estimate_i0",
    "reference_i0",
    "verify_hessian_limit",
    "verify_score_clt",
    "run_comparison",
    "rel_frobenius",
    "median3",
]

WARM_START_SD = 0.01
N_REFERENCE = 100_000
ESTIMATOR_NAMES = ("logdet", "ols", "gls_true")


@dataclass(frozen=True)
class InfoMatrix:
    """I0 in the flat-parameter basis of ``arch``; ``source`` records whether
    the weighting covariance was the true one or a plug-in estimate."""

    i0: np.ndarray
    arch: mlp.Architecture
    source: str = "at_true_gamma"

    def __post_init__(self) -> None:
        if self.source not in ("at_true_gamma", "plugin_gamma"):
            raise DimensionMismatch(f"unknown source {self.source!r}")
        m = np.asarray(self.i0, dtype=np.float64)
        if m.shape != (self.arch.param_count, self.arch.param_count):
            raise DimensionMismatch(
                f"expected {self.arch.param_count} square, got {m.shape}"
            )
        m = (m + m.T) / 2.0
        m.setflags(write=False)
        object.__setattr__(self, "i0", m)

    def inverse(self) -> np.ndarray:
        """I0^{-1}, the optimal asymptotic covariance of sqrt(n)(W_hat-W0).
        Raises NotPositiveDefinite when the architecture is degenerate."""
        return SpdMatrix(self.i0).inverse().entries


def estimate_i0(w: ParamVector, data: Dataset, gamma: SpdMatrix,
                source: str = "at_true_gamma") -> InfoMatrix:
    """Entry (k,l) = tr(gamma^{-1} B_bar(k,l)) with B_bar the dataset average
    of the Jacobian outer products dF/dW_k (dF/dW_l)^T."""
    if gamma.dim != w.arch.output_dim:
        raise DimensionMismatch(
            f"gamma is {gamma.dim}-dimensional, network outputs {w.arch.output_dim}"
        )
    jac = mlp.jacobian(w, data.inputs)
    n, p, d = jac.shape
    solved = gamma.solve(jac.reshape(n * p, d).T).T.reshape(n, p, d)
    i0 = np.einsum("nkd,nld->kl", jac, solved) / n
    return InfoMatrix(i0, w.arch, source)


def reference_i0(w0: ParamVector, gamma0: SpdMatrix, seed: int,
                 n_ref: int = N_REFERENCE) -> InfoMatrix:
    """I0 at a large dedicated input sample, with the true noise covariance.
    Computed once per study so reference noise stays out of the bands."""
    z = substream(seed, STREAM_REFERENCE).standard_normal((n_ref, w0.arch.input_dim))
    data = Dataset(z, mlp.forward(w0, z))
    return estimate_i0(w0, data, gamma0, source="at_true_gamma")


def rel_frobenius(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||_F / ||b||_F."""
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def median3(values) -> list[float]:
    """3-point running median with nearest-endpoint padding; trend checks
    read this instead of the raw sequence so one noisy point cannot fake or
    mask a violation."""
    xs = [float(v) for v in values]
    padded = xs[:1] + xs + xs[-1:]
    return [float(np.median(padded[i: i + 3])) for i in range(len(xs))]


@dataclass(frozen=True)
class HessianLimitRow:
    """One sample size of the Hessian-limit sweep."""

    n: int
    distance: float | None
    error: str | None = None


def verify_hessian_limit(w0: ParamVector, spec: GenSpec, n_grid,
                         i0: InfoMatrix | None = None) -> list[HessianLimitRow]:
    """Relative Frobenius distance of the log-det Hessian at W0 to 2 I0,
    for one fresh dataset per sample size. Singular covariances at tiny n
    are reported in the row, not raised."""
    grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DimensionMismatch("sample sizes must be strictly increasing")
    if i0 is None:
        i0 = reference_i0(w0, spec.noise.gamma0, spec.seed)
    target = 2.0 * i0.i0
    rows = []
    for idx, n in enumerate(grid):
        seed = derived_seed(spec.seed, STREAM_REPLICATIONS, idx)
        data = sample_dataset(GenSpec(spec.w0, spec.noise, n, seed))
        try:
            h = costs.hessian(LogDet(), w0, data)
        except SingularCovariance as exc:
            rows.append(HessianLimitRow(n, None, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(HessianLimitRow(n, rel_frobenius(h, target)))
    return rows


@dataclass(frozen=True)
class ScoreCltReport:
    """Covariance diagnostics for the scaled score at the truth."""

    n: int
    replications: int
    scores: np.ndarray            # (R_ok, p) rows sqrt(n) grad U_n(W0)
    cov: np.ndarray               # empirical covariance of the rows
    distance: float               # rel Frobenius distance of cov to 4 I0
    variance_ratios: np.ndarray   # diag(cov) / diag(4 I0)
    band_halfwidth: float         # 4 / sqrt(R)
    mean: np.ndarray
    mean_se: np.ndarray
    failures: list[str] = field(default_factory=list)


def verify_score_clt(w0: ParamVector, spec: GenSpec, R: int, n: int,
                     i0: InfoMatrix | None = None) -> ScoreCltReport:
    """Draw R independent datasets of size n and compare the covariance of
    sqrt(n) grad U_n(W0) against 4 I0."""
    if R < 200:
        raise DimensionMismatch("need at least 200 replications for covariance bands")
    if i0 is None:
        i0 = reference_i0(w0, spec.noise.gamma0, spec.seed)
    target = 4.0 * i0.i0
    scores = []
    failures: list[str] = []
    root_n = np.sqrt(n)
    for r in range(R):
        seed = derived_seed(spec.seed, STREAM_REPLICATIONS, r)
        data = sample_dataset(GenSpec(spec.w0, spec.noise, n, seed))
        try:
            scores.append(root_n * costs.gradient(LogDet(), w0, data))
        except SingularCovariance as exc:
            failures.append(f"replication {r}: {type(exc).__name__}: {exc}")
    rows = np.asarray(scores)
    cov = np.atleast_2d(np.cov(rows, rowvar=False, ddof=1))
    return ScoreCltReport(
        n=n,
        replications=R,
        scores=rows,
        cov=cov,
        distance=rel_frobenius(cov, target),
        variance_ratios=np.diag(cov) / np.diag(target),
        band_halfwidth=4.0 / np.sqrt(R),
        mean=rows.mean(axis=0),
        mean_se=rows.std(axis=0, ddof=1) / np.sqrt(len(rows)),
        failures=failures,
    )


@dataclass(frozen=True)
class FitRow:
    """One estimator's outcome on one replication."""

    replication: int
    converged: bool
    w: np.ndarray | None
    cost: float | None


@dataclass(frozen=True)
class EstimatorResult:
    """All replications of one estimator, plus its scaled-error covariance
    over the converged ones."""

    name: str
    rows: list[FitRow]
    converged_count: int
    failed_count: int
    scaled_cov: np.ndarray | None


@dataclass(frozen=True)
class McSummary:
    """Headline comparisons, computed over the replications where all three
    estimators converged (paired, common random numbers)."""

    dist_logdet_vs_optimal: float
    dist_logdet_vs_gls: float
    trace_ratio_ols_logdet: float
    trace_ratio_se: float
    common_converged: int
    failure_rate: float
    warm_start_sd: float = WARM_START_SD


@dataclass(frozen=True)
class McReport:
    """Full outcome of one estimator-comparison study."""

    n: int
    replications: int
    estimators: dict[str, EstimatorResult]
    i0: InfoMatrix
    i0_inv: np.ndarray
    summary: McSummary


def _scaled_cov(w_rows: np.ndarray, w0: np.ndarray, n: int) -> np.ndarray:
    errs = np.sqrt(n) * (w_rows - w0)
    return np.atleast_2d(np.cov(errs, rowvar=False, ddof=1))


def _replicate(args):
    """One replication: one dataset, one shared warm start, three fits.
    Module-level so process pools can ship it."""
    spec, n, r, method, grad_tol, cost_tol, max_iters = args
    w0 = spec.w0
    p = len(w0)
    warm = w0.values + WARM_START_SD * substream(
        spec.seed, STREAM_WARMSTART, r
    ).standard_normal(p)
    cfg = FitConfig(
        method=method,
        grad_tol=grad_tol,
        cost_tol=cost_tol,
        max_iters=max_iters,
        restarts=1,
        seed=derived_seed(spec.seed, STREAM_WARMSTART, r),
        warm_start=ParamVector(warm, w0.arch),
    )
    data = sample_dataset(
        GenSpec(w0, spec.noise, n, derived_seed(spec.seed, STREAM_REPLICATIONS, r))
    )
    kinds = {
        "logdet": LogDet(),
        "ols": Ols(),
        "gls_true": Gls(spec.noise.gamma0),
    }
    out = {}
    for name, kind in kinds.items():
        try:
            report = minimize(kind, data, w0.arch, cfg)
            out[name] = (bool(report.converged), report.w_hat.values, report.final_cost)
        except AllRestartsFailed:
            out[name] = (False, None, None)
    return r, out


def run_comparison(spec: GenSpec, n: int, R: int, cfg: FitConfig,
                   threads: int = 1, n_ref: int = N_REFERENCE) -> McReport:
    """Fit the three estimators on R replicated datasets of size n and
    compare their scaled-error covariances against I0^{-1}.

    Each replication warm-starts every estimator at the same perturbed truth
    (see module docstring) and runs a single restart; cfg supplies the solver
    policy (method, tolerances, iteration cap). Failed or non-converged fits
    are excluded from covariances and counted, never imputed.
    """
    if R < 200:
        raise DimensionMismatch("need at least 200 replications for covariance bands")
    if threads < 1:
        raise DimensionMismatch("threads must be at least 1")
    w0 = spec.w0
    i0 = reference_i0(w0, spec.noise.gamma0, spec.seed, n_ref)
    i0_inv = i0.inverse()

    jobs = [
        (spec, n, r, cfg.method, cfg.grad_tol, cfg.cost_tol, cfg.max_iters)
        for r in range(R)
    ]
    if threads == 1:
        raw = [_replicate(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(_replicate, jobs, chunksize=max(1, R // (threads * 8))))
    raw.sort(key=lambda pair: pair[0])

    estimators: dict[str, EstimatorResult] = {}
    for name in ESTIMATOR_NAMES:
        rows = [
            FitRow(r, conv, w, c)
            for r, per in raw
            for conv, w, c in [per[name]]
        ]
        ok = [row for row in rows if row.converged]
        cov = None
        if len(ok) >= 2:
            cov = _scaled_cov(np.array([row.w for row in ok]), w0.values, n)
        estimators[name] = EstimatorResult(
            name=name,
            rows=rows,
            converged_count=len(ok),
            failed_count=len(rows) - len(ok),
            scaled_cov=cov,
        )

    by_rep = dict(raw)
    common = [
        r for r, per in raw if all(per[name][0] for name in ESTIMATOR_NAMES)
    ]
    failure_rate = 1.0 - len(common) / R
    if len(common) >= 2:
        paired = {
            name: np.array([by_rep[r][name][1] for r in common])
            for name in ESTIMATOR_NAMES
        }
        cov_common = {
            name: _scaled_cov(paired[name], w0.values, n) for name in ESTIMATOR_NAMES
        }
        dist_opt = rel_frobenius(cov_common["logdet"], i0_inv)
        dist_gls = float(
            np.linalg.norm(cov_common["logdet"] - cov_common["gls_true"])
            / np.linalg.norm(i0_inv)
        )
        ratio, ratio_se = _trace_ratio_jackknife(
            paired["ols"], paired["logdet"], w0.values, n
        )
    else:
        dist_opt = dist_gls = ratio = ratio_se = float("nan")
    summary = McSummary(
        dist_logdet_vs_optimal=dist_opt,
        dist_logdet_vs_gls=dist_gls,
        trace_ratio_ols_logdet=ratio,
        trace_ratio_se=ratio_se,
        common_converged=len(common),
        failure_rate=failure_rate,
    )
    return McReport(n, R, estimators, i0, i0_inv, summary)


def _trace_ratio_jackknife(w_num: np.ndarray, w_den: np.ndarray,
                           w0: np.ndarray, n: int) -> tuple[float, float]:
    """Leave-one-replication-out standard error for
    trace(cov_num)/trace(cov_den) over paired fits."""
    m = w_num.shape[0]
    full = float(
        np.trace(_scaled_cov(w_num, w0, n)) / np.trace(_scaled_cov(w_den, w0, n))
    )
    if m < 3:
        return full, float("nan")
    keep = np.ones(m, dtype=bool)
    loo = np.empty(m)
    for i in range(m):
        keep[i] = False
        loo[i] = np.trace(_scaled_cov(w_num[keep], w0, n)) / np.trace(
            _scaled_cov(w_den[keep], w0, n)
        )
        keep[i] = True
    se = float(np.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2)))
    return full, se
