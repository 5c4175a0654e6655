"""Diagnostic figures for the Monte Carlo study, rendered headlessly to PNG
files next to the delimited reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "hessian_limit_figure",
    "score_clt_figure",
    "covariance_figure",
    "efficiency_figure",
    "write_figures",
]

_DPI = 120


def hessian_limit_figure(rows, path: Path) -> Path:
    """Distance of the Hessian at the truth to its limit, against n."""
    ok = [(row.n, row.distance) for row in rows if row.distance is not None]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if ok:
        ns, dists = zip(*ok)
        ax.loglog(ns, dists, "o-", color="tab:blue")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("rel. Frobenius distance to limit")
    ax.set_title("Hessian at the truth vs. its limit")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def score_clt_figure(score, path: Path) -> Path:
    """Per-component variance ratios of the scaled score with the
    replication-count band around 1."""
    ratios = np.asarray(score.variance_ratios)
    comps = np.arange(1, len(ratios) + 1)
    band = score.band_halfwidth
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.axhspan(1 - band, 1 + band, color="tab:green", alpha=0.15,
               label=f"1 ± {band:.3f}")
    ax.axhline(1.0, color="tab:green", lw=1)
    ax.plot(comps, ratios, "o", color="tab:blue")
    ax.set_xlabel("parameter component")
    ax.set_ylabel("variance ratio")
    ax.set_title(f"Score variance vs. target (R={score.replications}, n={score.n})")
    ax.set_xticks(comps)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def covariance_figure(report, path: Path) -> Path:
    """Heatmaps of the scaled-error covariances next to the optimal one."""
    panels = [("logdet fit", report.estimators["logdet"].scaled_cov),
              ("true-weight GLS fit", report.estimators["gls_true"].scaled_cov),
              ("optimal (inverse info.)", report.i0_inv)]
    mats = [m for _, m in panels if m is not None]
    vmax = max(float(np.max(np.abs(m))) for m in mats) if mats else 1.0
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.6))
    for ax, (title, m) in zip(axes, panels):
        if m is None:
            ax.text(0.5, 0.5, "not available", ha="center", va="center")
            ax.set_axis_off()
        else:
            im = ax.imshow(m, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
            fig.colorbar(im, ax=ax, fraction=0.046)
        ax.set_title(title, fontsize=9)
    fig.suptitle(f"Scaled-error covariances (n={report.n})", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def efficiency_figure(report, path: Path) -> Path:
    """Trace-efficiency of plain least squares against the log-det fit,
    with a two-standard-error bar."""
    s = report.summary
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.bar([0], [s.trace_ratio_ols_logdet], width=0.5, color="tab:orange",
           yerr=[2 * s.trace_ratio_se], capsize=6)
    ax.axhline(1.0, color="black", lw=1, ls="--", label="parity")
    ax.set_xticks([0])
    ax.set_xticklabels(["trace(S_ols) / trace(S_logdet)"])
    ax.set_ylabel("ratio")
    ax.set_title(f"Efficiency ratio ± 2 SE ({s.common_converged} paired fits)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def write_figures(report, hessian_rows, score, out_dir: Path) -> list[Path]:
    """All study figures into out_dir; skips the pieces the study did not run."""
    out_dir = Path(out_dir)
    written = []
    if hessian_rows is not None:
        written.append(hessian_limit_figure(hessian_rows, out_dir / "hessian_limit.png"))
    if score is not None:
        written.append(score_clt_figure(score, out_dir / "score_variance.png"))
    if report is not None:
        written.append(covariance_figure(report, out_dir / "covariances.png"))
        written.append(efficiency_figure(report, out_dir / "efficiency.png"))
    return written
