"""Persistence formats: canonical number rendering, dataset CSV, weights and
truth JSON, and the report emitters used by the command-line tools.

Every real number is written with 17 significant decimal digits, which is
exactly enough to reconstruct the same 64-bit float on parse. JSON is emitted
by a small writer of our own so that key order, spacing, and number formatting
are fully pinned down: rerunning a seeded experiment must reproduce its report
files byte for byte.
"""

from __future__ import annotations

import json

import numpy as np

from . import __version__
from .cost import Dataset
from .errors import ConfigError, DimensionMismatch
from .mlp import Architecture, ParamVector
from .sampling import RNG_KIND, GenSpec
from .spd import SpdMatrix

__all__ = [
    "render_real",
    "parse_real",
    "dumps_canonical",
    "dataset_to_csv",
    "dataset_from_csv",
    "arch_obj",
    "arch_from_obj",
    "weights_obj",
    "weights_from_obj",
    "truth_obj",
    "truth_from_obj",
    "gamma_from_obj",
    "matrix_obj",
    "fit_report_obj",
    "mc_report_obj",
    "mc_rows_csv",
    "hessian_rows_csv",
    "score_ratios_csv",
]


def render_real(x: float) -> str:
    """17-significant-digit decimal string; parses back to the same float."""
    v = float(x)
    if not np.isfinite(v):
        raise ValueError(f"cannot persist non-finite value {v!r}")
    s = format(v, ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def parse_real(s: str) -> float:
    return float(s)


def _write_json(out: list, obj, indent: int, level: int) -> None:
    pad = " " * (indent * level)
    inner = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise ValueError(f"JSON object keys must be strings, got {key!r}")
            out.append(f"{inner}{json.dumps(key)}: ")
            _write_json(out, val, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            out.append("[]")
            return
        out.append("[\n")
        for i, val in enumerate(obj):
            out.append(inner)
            _write_json(out, val, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        # reports stay valid JSON even when a summary statistic could not
        # be computed (e.g. too few converged replications)
        out.append(render_real(obj) if np.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _write_json(out, obj.tolist(), indent, level)
    else:
        raise ValueError(f"cannot persist object of type {type(obj).__name__}")


def dumps_canonical(obj, indent: int = 2) -> str:
    """Deterministic JSON text: insertion-ordered keys, fixed indentation,
    all reals through render_real. Ends with a newline."""
    out: list = []
    _write_json(out, obj, indent, 0)
    return "".join(out) + "\n"


def dataset_to_csv(data: Dataset) -> str:
    """Header z1..zq,y1..yd, one observation per line."""
    q = data.inputs.shape[1]
    d = data.targets.shape[1]
    header = ",".join([f"z{i + 1}" for i in range(q)] + [f"y{i + 1}" for i in range(d)])
    lines = [header]
    for zrow, yrow in zip(data.inputs, data.targets):
        lines.append(",".join(render_real(v) for v in (*zrow, *yrow)))
    return "\n".join(lines) + "\n"


def _parse_csv_header(header: str) -> tuple[int, int]:
    names = header.strip().split(",")
    q = 0
    while q < len(names) and names[q] == f"z{q + 1}":
        q += 1
    d = 0
    while q + d < len(names) and names[q + d] == f"y{d + 1}":
        d += 1
    if q == 0 or d == 0 or q + d != len(names):
        raise ConfigError(
            f"row 1: expected header z1..zq,y1..yd, got {header.strip()!r}"
        )
    return q, d


def dataset_from_csv(text: str) -> Dataset:
    """Inverse of dataset_to_csv; parse errors carry row and column numbers
    (1-based, the header is row 1)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError("row 1: empty dataset file")
    q, d = _parse_csv_header(lines[0])
    rows = np.empty((len(lines) - 1, q + d))
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != q + d:
            raise ConfigError(f"row {i}: expected {q + d} columns, got {len(cells)}")
        for j, cell in enumerate(cells):
            try:
                rows[i - 2, j] = parse_real(cell)
            except ValueError:
                raise ConfigError(
                    f"row {i}, column {j + 1}: could not parse {cell.strip()!r}"
                ) from None
    if rows.shape[0] == 0:
        raise ConfigError("row 2: dataset has a header but no observations")
    return Dataset(rows[:, :q], rows[:, q:])


def arch_obj(arch: Architecture) -> dict:
    return {
        "q": arch.input_dim,
        "hidden": list(arch.hidden_dims),
        "d": arch.output_dim,
        "activation": arch.activation,
    }


def arch_from_obj(obj) -> Architecture:
    try:
        return Architecture(
            int(obj["q"]),
            tuple(int(h) for h in obj["hidden"]),
            int(obj["d"]),
            activation=str(obj["activation"]),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad architecture object: {exc}") from None


def weights_obj(w: ParamVector) -> dict:
    return {"arch": arch_obj(w.arch), "values": [float(v) for v in w.values]}


def weights_from_obj(obj) -> ParamVector:
    try:
        arch = arch_from_obj(obj["arch"])
        values = np.array([parse_real(v) if isinstance(v, str) else float(v)
                           for v in obj["values"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad weights object: {exc}") from None
    if len(values) != arch.param_count:
        raise ConfigError(
            f"weights object has {len(values)} values, "
            f"architecture needs {arch.param_count}"
        )
    return ParamVector(values, arch)


def matrix_obj(m) -> list:
    return [[float(v) for v in row] for row in np.asarray(m)]


def truth_obj(spec: GenSpec) -> dict:
    """The generating ground truth, kept separate from the dataset so that a
    fit can never read it by accident."""
    return {
        "arch": arch_obj(spec.w0.arch),
        "w0": [float(v) for v in spec.w0.values],
        "gamma0": matrix_obj(spec.noise.gamma0.entries),
        "seed": int(spec.seed),
        "rng": RNG_KIND,
    }


def truth_from_obj(obj) -> tuple[ParamVector, SpdMatrix, int]:
    try:
        w0 = weights_from_obj({"arch": obj["arch"], "values": obj["w0"]})
        gamma0 = SpdMatrix(np.array(obj["gamma0"], dtype=np.float64))
        seed = int(obj["seed"])
    except (KeyError, TypeError, ValueError, DimensionMismatch) as exc:
        raise ConfigError(f"bad truth object: {exc}") from None
    return w0, gamma0, seed


def gamma_from_obj(obj) -> SpdMatrix:
    """A noise covariance from either a bare matrix or any object carrying a
    gamma0 field (so a truth file works directly)."""
    if isinstance(obj, dict):
        if "gamma0" not in obj:
            raise ConfigError("covariance object has no gamma0 field")
        obj = obj["gamma0"]
    try:
        return SpdMatrix(np.array(obj, dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad covariance matrix: {exc}") from None


def fit_report_obj(report, kind_name: str, config_echo: dict) -> dict:
    return {
        "version": __version__,
        "rng": RNG_KIND,
        "cost_kind": kind_name,
        "converged": bool(report.converged),
        "final_cost": float(report.final_cost),
        "grad_norm": float(report.grad_norm),
        "iterations": int(report.iterations),
        "restarts_used": int(report.restarts_used),
        "failure_log": list(report.failure_log),
        "weights": weights_obj(report.w_hat),
        "config_echo": config_echo,
    }


def _estimator_obj(est) -> dict:
    return {
        "converged": est.converged_count,
        "failed": est.failed_count,
        "scaled_cov": None if est.scaled_cov is None else matrix_obj(est.scaled_cov),
    }


def mc_report_obj(report, config_echo: dict, hessian_rows=None, score=None,
                  bands=None) -> dict:
    """The study report as a plain JSON-ready object. hessian_rows and score
    attach the two limit verifications when the study ran them; bands attaches
    the pass/fail record of frozen tolerance checks."""
    s = report.summary
    obj = {
        "version": __version__,
        "rng": RNG_KIND,
        "n": report.n,
        "replications": report.replications,
        "warm_start_sd": float(s.warm_start_sd),
        "estimators": {
            name: _estimator_obj(est) for name, est in report.estimators.items()
        },
        "summary": {
            "dist_logdet_vs_optimal": float(s.dist_logdet_vs_optimal),
            "dist_logdet_vs_gls": float(s.dist_logdet_vs_gls),
            "trace_ratio_ols_logdet": float(s.trace_ratio_ols_logdet),
            "trace_ratio_se": float(s.trace_ratio_se),
            "common_converged": int(s.common_converged),
            "failure_rate": float(s.failure_rate),
        },
        "i0": matrix_obj(report.i0.i0),
        "i0_inv": matrix_obj(report.i0_inv),
        "config_echo": config_echo,
    }
    if hessian_rows is not None:
        obj["hessian_limit"] = [
            {"n": row.n, "distance": None if row.distance is None else float(row.distance),
             "error": row.error}
            for row in hessian_rows
        ]
    if score is not None:
        obj["score_clt"] = {
            "n": score.n,
            "replications": score.replications,
            "distance": float(score.distance),
            "band_halfwidth": float(score.band_halfwidth),
            "variance_ratios": [float(v) for v in score.variance_ratios],
            "failures": list(score.failures),
        }
    if bands is not None:
        obj["bands"] = bands
    return obj


def mc_rows_csv(report) -> str:
    """One row per replication per estimator; failed fits leave the weight
    and cost cells empty rather than imputing anything."""
    p = report.i0.i0.shape[0]
    header = ["replication", "estimator", "converged"]
    header += [f"w{i + 1}" for i in range(p)]
    header.append("cost")
    lines = [",".join(header)]
    for name in report.estimators:
        for row in report.estimators[name].rows:
            cells = [str(row.replication), name, "true" if row.converged else "false"]
            if row.w is None:
                cells += [""] * (p + 1)
            else:
                cells += [render_real(v) for v in row.w]
                cells.append(render_real(row.cost))
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def hessian_rows_csv(rows) -> str:
    lines = ["n,distance,error"]
    for row in rows:
        dist = "" if row.distance is None else render_real(row.distance)
        err = "" if row.error is None else row.error.replace(",", ";")
        lines.append(f"{row.n},{dist},{err}")
    return "\n".join(lines) + "\n"


def score_ratios_csv(score) -> str:
    lines = ["component,variance_ratio"]
    for i, v in enumerate(score.variance_ratios):
        lines.append(f"{i + 1},{render_real(v)}")
    return "\n".join(lines) + "\n"
