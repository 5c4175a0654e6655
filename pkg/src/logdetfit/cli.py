"""Command-line interface: dataset generation, fitting, derivative checking,
and Monte Carlo studies.

Subcommands
-----------
generate    sample a dataset from a configured truth; writes dataset.csv and
            truth.json (kept separate so a fit can never read the truth).
fit         fit a network to a dataset CSV with a chosen cost; writes
            fit_report.json and weights.json.
gradcheck   finite-difference verification of the analytic gradient and
            Hessian over random instances.
montecarlo  the full study: estimator comparison plus the two limit
            verifications, with delimited reports and diagnostic figures.

Exit codes: 0 success, 1 internal failure or a missed tolerance band,
2 non-convergence, 3 configuration or parse error.

Config files are flat ``key = value`` text under ``[section]`` headers.
Unknown sections or keys are rejected with their line number; so is any value
that fails to parse. Blank lines and lines starting with ``#`` or ``;`` are
ignored. The full config is echoed into every report it produces.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    reference_i0,
    run_comparison,
    verify_hessian_limit,
    verify_score_clt,
)
from .cost import Dataset, Gls, LogDet, Ols, cost, gradient, hessian
from .errors import (
    AllRestartsFailed,
    ConfigError,
    DimensionMismatch,
    EstimationError,
    NotPositiveDefinite,
)
from .mlp import Architecture, ParamVector, forward, init_random
from .optimize import FitConfig, minimize
from .reporting import (
    dataset_from_csv,
    dataset_to_csv,
    dumps_canonical,
    fit_report_obj,
    gamma_from_obj,
    hessian_rows_csv,
    mc_report_obj,
    mc_rows_csv,
    score_ratios_csv,
    truth_obj,
    weights_from_obj,
    weights_obj,
)
from .sampling import GenSpec, NoiseSpec, make_gamma0, sample_dataset, substream

__all__ = ["main", "console_entry", "ExperimentConfig", "parse_config",
           "run_gradient_check", "run_hessian_check"]

# test-build hook: gradcheck adds this to the first analytic gradient entry,
# so the harness sensitivity can itself be checked
_GRADIENT_CORRUPTION = 0.0

GRAD_TOL = 1e-6
HESS_TOL = 1e-5

_SCHEMA = {
    "model": {"q", "hidden", "d", "activation"},
    "truth": {"w0", "w0_seed", "gamma0", "rho", "scale"},
    "generate": {"n", "seed"},
    "fit": {"method", "grad_tol", "cost_tol", "max_iters", "restarts", "seed"},
    "study": {"n", "replications", "seed", "threads", "score_replications",
              "score_n", "hessian_grid", "figures"},
    "bands": {"max_dist_optimal", "max_dist_gls", "ratio_exceeds_one_sigmas",
              "ratio_within_sigmas", "max_score_dist", "max_hessian_final",
              "max_failure_rate"},
}

_REQUIRED = object()


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed config: raw string values per section plus the line number of
    every key, for error messages that point at the offending line."""

    sections: dict
    lines: dict

    def echo(self) -> dict:
        return {sec: dict(kv) for sec, kv in self.sections.items()}

    def _raw(self, section: str, key: str, default=_REQUIRED):
        if section in self.sections and key in self.sections[section]:
            return self.sections[section][key]
        if default is _REQUIRED:
            raise ConfigError(f"missing required key '{key}' in section [{section}]")
        return default

    def _where(self, section: str, key: str) -> str:
        return f"line {self.lines[(section, key)]}: "

    def _typed(self, section: str, key: str, convert, typename, default):
        raw = self._raw(section, key, default)
        if raw is default and not isinstance(raw, str):
            return raw
        try:
            return convert(raw)
        except (TypeError, ValueError):
            raise ConfigError(
                f"{self._where(section, key)}key '{key}' must be"
                f" {typename}, got {raw!r}"
            ) from None

    def get_int(self, section, key, default=_REQUIRED):
        return self._typed(section, key, int, "an integer", default)

    def get_float(self, section, key, default=_REQUIRED):
        return self._typed(section, key, float, "a real number", default)

    def get_str(self, section, key, default=_REQUIRED):
        return self._raw(section, key, default)

    def get_bool(self, section, key, default=_REQUIRED):
        def conv(raw):
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)

        return self._typed(section, key, conv, "true or false", default)

    def get_int_list(self, section, key, default=_REQUIRED):
        def conv(raw):
            return [int(part) for part in raw.split(",") if part.strip()]

        return self._typed(section, key, conv, "a comma-separated integer list", default)

    def get_float_list(self, section, key, default=_REQUIRED):
        def conv(raw):
            return [float(part) for part in raw.split(",") if part.strip()]

        return self._typed(section, key, conv, "a comma-separated number list", default)

    def has(self, section, key) -> bool:
        return section in self.sections and key in self.sections[section]

    # -- typed views over the schema ------------------------------------

    def architecture(self) -> Architecture:
        q = self.get_int("model", "q")
        hidden = tuple(self.get_int_list("model", "hidden"))
        d = self.get_int("model", "d")
        activation = self.get_str("model", "activation", "tanh")
        try:
            return Architecture(q, hidden, d, activation=activation)
        except DimensionMismatch as exc:
            raise ConfigError(f"bad [model] section: {exc}") from None

    def gamma0(self, d: int):
        kind = self.get_str("truth", "gamma0", "identity")
        rho = self.get_float("truth", "rho", 0.0)
        scale = self.get_float("truth", "scale", 1.0)
        try:
            return make_gamma0(kind, d, scale=scale, rho=rho)
        except (DimensionMismatch, NotPositiveDefinite) as exc:
            raise ConfigError(f"bad [truth] section: {exc}") from None

    def true_weights(self, arch: Architecture) -> ParamVector:
        if self.has("truth", "w0") and self.has("truth", "w0_seed"):
            raise ConfigError(
                f"{self._where('truth', 'w0_seed')}give either w0 or w0_seed, not both"
            )
        if self.has("truth", "w0"):
            values = np.array(self.get_float_list("truth", "w0"))
            if len(values) != arch.param_count:
                raise ConfigError(
                    f"{self._where('truth', 'w0')}w0 has {len(values)} values,"
                    f" the model needs {arch.param_count}"
                )
            return ParamVector(values, arch)
        if self.has("truth", "w0_seed"):
            return init_random(arch, self.get_int("truth", "w0_seed"))
        raise ConfigError("section [truth] needs either w0 or w0_seed")

    def gen_spec(self) -> GenSpec:
        arch = self.architecture()
        w0 = self.true_weights(arch)
        noise = NoiseSpec(self.gamma0(arch.output_dim))
        n = self.get_int("generate", "n")
        seed = self.get_int("generate", "seed")
        if n < 1:
            raise ConfigError(f"{self._where('generate', 'n')}n must be at least 1")
        return GenSpec(w0, noise, n, seed)

    def fit_config(self, warm_start=None) -> FitConfig:
        try:
            return FitConfig(
                method=self.get_str("fit", "method", "quasi_newton"),
                grad_tol=self.get_float("fit", "grad_tol", 1e-6),
                cost_tol=self.get_float("fit", "cost_tol", 1e-10),
                max_iters=self.get_int("fit", "max_iters", 5000),
                restarts=self.get_int("fit", "restarts", 10),
                seed=self.get_int("fit", "seed", 0),
                warm_start=warm_start,
            )
        except DimensionMismatch as exc:
            raise ConfigError(f"bad [fit] section: {exc}") from None

    def bands(self) -> dict:
        return {
            "max_dist_optimal": self.get_float("bands", "max_dist_optimal", None),
            "max_dist_gls": self.get_float("bands", "max_dist_gls", None),
            "ratio_exceeds_one_sigmas": self.get_float(
                "bands", "ratio_exceeds_one_sigmas", None),
            "ratio_within_sigmas": self.get_float("bands", "ratio_within_sigmas", None),
            "max_score_dist": self.get_float("bands", "max_score_dist", None),
            "max_hessian_final": self.get_float("bands", "max_hessian_final", None),
            "max_failure_rate": self.get_float("bands", "max_failure_rate", 0.05),
        }


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate the config text; any problem names its line."""
    sections: dict = {}
    lines: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(
                    f"line {lineno}: unknown section [{name}]; expected one of "
                    + ", ".join(sorted(_SCHEMA))
                )
            current = name
            sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA[current]:
            raise ConfigError(
                f"line {lineno}: unknown key '{key}' in section [{current}]; "
                "expected one of " + ", ".join(sorted(_SCHEMA[current]))
            )
        if key in sections[current]:
            raise ConfigError(
                f"line {lineno}: duplicate key '{key}' in section [{current}]"
            )
        sections[current][key] = value
        lines[(current, key)] = lineno
    return ExperimentConfig(sections, lines)


def load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


class _Manifest:
    """Collects the files a study writes so that an aborted run leaves an
    explicit record of what exists and why it stopped."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: list[str] = []

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.files.append(name)
        return path

    def note(self, path: Path) -> None:
        self.files.append(path.name)

    def finalize(self, status: str, error: str | None = None) -> None:
        lines = [f"status: {status}"]
        if error is not None:
            lines.append(f"error: {error}")
        lines += [f"file: {name}" for name in self.files]
        (self.out_dir / "MANIFEST").write_text("\n".join(lines) + "\n")


# -- subcommands ---------------------------------------------------------


def cmd_generate(args) -> int:
    config = load_config(args.config)
    spec = config.gen_spec()
    data = sample_dataset(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "dataset.csv").write_text(dataset_to_csv(data))
    truth = truth_obj(spec)
    truth["config_echo"] = config.echo()
    (out / "truth.json").write_text(dumps_canonical(truth))
    print(f"wrote {out / 'dataset.csv'} ({spec.n} observations) and {out / 'truth.json'}")
    return 0


def _cost_kind(args):
    if args.cost == "logdet":
        return LogDet(), "logdet"
    if args.cost == "ols":
        return Ols(), "ols"
    if args.gamma is None:
        raise ConfigError("--cost gls requires --gamma FILE")
    import json as _json

    try:
        obj = _json.loads(Path(args.gamma).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read --gamma file: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"--gamma file is not valid JSON: {exc}") from None
    return Gls(gamma_from_obj(obj)), "gls"


def cmd_fit(args) -> int:
    try:
        text = Path(args.data).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {args.data}: {exc}") from None
    data = dataset_from_csv(text)
    arch = Architecture(
        data.inputs.shape[1], tuple(args.hidden), data.targets.shape[1]
    )
    kind, kind_name = _cost_kind(args)
    warm = None
    if args.warm_start is not None:
        import json as _json

        warm = weights_from_obj(_json.loads(Path(args.warm_start).read_text()))
    cfg = FitConfig(
        method=args.method,
        grad_tol=args.grad_tol,
        cost_tol=args.cost_tol,
        max_iters=args.max_iters,
        restarts=args.restarts,
        seed=args.seed,
        warm_start=warm,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = minimize(kind, data, arch, cfg)
    except AllRestartsFailed as exc:
        record = {
            "version": __version__,
            "cost_kind": kind_name,
            "converged": False,
            "failure_log": list(exc.failure_log),
        }
        (out / "fit_report.json").write_text(dumps_canonical(record))
        print(f"fit failed: every restart errored; see {out / 'fit_report.json'}",
              file=sys.stderr)
        return 2
    echo = {"data": str(args.data), "cost": kind_name,
            "hidden": ",".join(str(h) for h in args.hidden)}
    (out / "fit_report.json").write_text(
        dumps_canonical(fit_report_obj(report, kind_name, echo))
    )
    (out / "weights.json").write_text(dumps_canonical(weights_obj(report.w_hat)))
    print(
        f"cost {report.final_cost:.12g}, grad sup-norm {report.grad_norm:.3g}, "
        f"{report.iterations} iterations, converged={report.converged}"
    )
    return 0 if report.converged else 2


def _random_instance(rng, arch=None):
    """One finite-difference trial: an architecture (given or drawn from the
    small-net family), weights, and a noisy dataset."""
    if arch is None:
        q = int(rng.integers(1, 4))
        width = int(rng.integers(2, 4))
        d = int(rng.integers(1, 4))
        arch = Architecture(q, (width,), d)
    n = int(rng.integers(20, 201))
    w = init_random(arch, rng)
    z = rng.standard_normal((n, arch.input_dim))
    y = forward(w, z) + 0.5 * rng.standard_normal((n, arch.output_dim))
    return w, Dataset(z, y)


def _fd_gradient(w, data, step=1e-6):
    out = np.empty(len(w))
    base = w.values
    for k in range(len(w)):
        delta = np.zeros_like(base)
        delta[k] = step
        up = cost(LogDet(), w.with_values(base + delta), data)
        down = cost(LogDet(), w.with_values(base - delta), data)
        out[k] = (up - down) / (2 * step)
    return out


def _fd_hessian(w, data, step=1e-5):
    p = len(w)
    out = np.empty((p, p))
    base = w.values
    for l in range(p):
        delta = np.zeros_like(base)
        delta[l] = step
        up = gradient(LogDet(), w.with_values(base + delta), data)
        down = gradient(LogDet(), w.with_values(base - delta), data)
        out[:, l] = (up - down) / (2 * step)
    return (out + out.T) / 2.0


def run_gradient_check(trials: int, seed: int, arch: Architecture | None = None):
    """Max scaled error of the analytic gradient against central differences
    over `trials` random instances."""
    worst = 0.0
    for t in range(trials):
        rng = substream(seed, 0, t)
        w, data = _random_instance(rng, arch)
        g = gradient(LogDet(), w, data)
        if _GRADIENT_CORRUPTION:
            g = g.copy()
            g[0] += _GRADIENT_CORRUPTION
        fd = _fd_gradient(w, data)
        err = np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(fd)))
        worst = max(worst, float(err))
    return worst


def run_hessian_check(trials: int, seed: int, arch: Architecture | None = None):
    """Max absolute-scale error of the analytic Hessian against central
    differences of the gradient over `trials` random instances."""
    worst = 0.0
    for t in range(trials):
        rng = substream(seed, 1, t)
        w, data = _random_instance(rng, arch)
        h = hessian(LogDet(), w, data)
        fd = _fd_hessian(w, data)
        err = np.max(np.abs(h - fd)) / max(1.0, np.max(np.abs(fd)))
        worst = max(worst, float(err))
    return worst


def cmd_gradcheck(args) -> int:
    arch = None
    if args.q is not None or args.d is not None or args.hidden is not None:
        if args.q is None or args.d is None or args.hidden is None:
            raise ConfigError("give all of --q/--hidden/--d or none of them")
        arch = Architecture(args.q, tuple(args.hidden), args.d)
    grad_err = run_gradient_check(args.trials, args.seed, arch)
    hess_err = run_hessian_check(args.trials, args.seed, arch)
    grad_ok = grad_err < GRAD_TOL
    hess_ok = hess_err < HESS_TOL
    print(f"gradient: max scaled error {grad_err:.3e} over {args.trials} instances "
          f"(tolerance {GRAD_TOL:g}) -> {'ok' if grad_ok else 'FAIL'}")
    print(f"hessian:  max scaled error {hess_err:.3e} over {args.trials} instances "
          f"(tolerance {HESS_TOL:g}) -> {'ok' if hess_ok else 'FAIL'}")
    return 0 if (grad_ok and hess_ok) else 1


def _evaluate_bands(bands: dict, summary, hessian_rows, score) -> dict:
    """Each configured band becomes a pass/fail record; absent bands are
    skipped. The failure-rate band always applies."""
    checks = {}

    def record(name, value, bound, ok):
        checks[name] = {"value": value, "bound": bound, "pass": bool(ok)}

    if bands["max_dist_optimal"] is not None:
        b = bands["max_dist_optimal"]
        record("dist_logdet_vs_optimal", summary.dist_logdet_vs_optimal, b,
               summary.dist_logdet_vs_optimal < b)
    if bands["max_dist_gls"] is not None:
        b = bands["max_dist_gls"]
        record("dist_logdet_vs_gls", summary.dist_logdet_vs_gls, b,
               summary.dist_logdet_vs_gls < b)
    if bands["ratio_exceeds_one_sigmas"] is not None:
        k = bands["ratio_exceeds_one_sigmas"]
        margin = summary.trace_ratio_ols_logdet - 1.0
        record("trace_ratio_margin_sigmas", margin, k * summary.trace_ratio_se,
               margin > k * summary.trace_ratio_se)
    if bands["ratio_within_sigmas"] is not None:
        k = bands["ratio_within_sigmas"]
        gap = abs(summary.trace_ratio_ols_logdet - 1.0)
        record("trace_ratio_gap_sigmas", gap, k * summary.trace_ratio_se,
               gap <= k * summary.trace_ratio_se)
    if bands["max_score_dist"] is not None and score is not None:
        b = bands["max_score_dist"]
        record("score_distance", score.distance, b, score.distance < b)
    if bands["max_hessian_final"] is not None and hessian_rows:
        final = hessian_rows[-1].distance
        b = bands["max_hessian_final"]
        record("hessian_final_distance", final, b,
               final is not None and final < b)
    b = bands["max_failure_rate"]
    record("failure_rate", summary.failure_rate, b, summary.failure_rate <= b)
    return checks


def cmd_montecarlo(args) -> int:
    config = load_config(args.config)
    arch = config.architecture()
    w0 = config.true_weights(arch)
    gamma0 = config.gamma0(arch.output_dim)
    n = config.get_int("study", "n")
    R = config.get_int("study", "replications")
    seed = config.get_int("study", "seed")
    if R < 200:
        raise ConfigError(
            f"{config._where('study', 'replications')}replications must be"
            f" at least 200 for covariance estimates, got {R}"
        )
    threads = args.threads if args.threads else config.get_int("study", "threads", 1)
    score_R = config.get_int("study", "score_replications", R)
    score_n = config.get_int("study", "score_n", n)
    grid = config.get_int_list("study", "hessian_grid", [100, 1000, 10000])
    figures_on = config.get_bool("study", "figures", True) and not args.no_figures
    bands = config.bands()
    cfg = config.fit_config()
    spec = GenSpec(w0, NoiseSpec(gamma0), n, seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(out)
    try:
        i0 = reference_i0(w0, gamma0, seed)
        hessian_rows = verify_hessian_limit(w0, spec, grid, i0=i0) if grid else None
        score = (verify_score_clt(w0, spec, score_R, score_n, i0=i0)
                 if score_R else None)
        report = run_comparison(spec, n, R, cfg, threads=threads)
        checks = _evaluate_bands(bands, report.summary, hessian_rows, score)

        obj = mc_report_obj(report, config.echo(), hessian_rows=hessian_rows,
                            score=score, bands=checks)
        manifest.write_text("mc_report.json", dumps_canonical(obj))
        manifest.write_text("mc_rows.csv", mc_rows_csv(report))
        if hessian_rows is not None:
            manifest.write_text("hessian_limit.csv", hessian_rows_csv(hessian_rows))
        if score is not None:
            manifest.write_text("score_ratios.csv", score_ratios_csv(score))
        if figures_on:
            from .figures import write_figures

            for path in write_figures(report, hessian_rows, score, out):
                manifest.note(path)
    except BaseException as exc:
        manifest.finalize("incomplete", error=f"{type(exc).__name__}: {exc}")
        raise
    manifest.finalize("complete")

    failed = {name: c for name, c in checks.items() if not c["pass"]}
    for name, c in checks.items():
        status = "ok" if c["pass"] else "FAIL"
        value = "n/a" if c["value"] is None else f"{c['value']:.6g}"
        print(f"{name}: value {value} vs bound {c['bound']:.6g} -> {status}")
    print(f"report written to {out / 'mc_report.json'}")
    if not failed:
        return 0
    if set(failed) == {"failure_rate"}:
        return 2
    return 1


# -- argument parsing ------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; this CLI reserves 2 for
    non-convergence, so usage problems are rethrown as config errors."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="logdetfit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample a dataset from a configured truth")
    gen.add_argument("config", help="experiment config file")
    gen.add_argument("--out", default=".", help="output directory")

    fit = sub.add_parser("fit", help="fit a network to a dataset CSV")
    fit.add_argument("--data", required=True, help="dataset CSV path")
    fit.add_argument("--hidden", required=True, type=int, nargs="+",
                     metavar="WIDTH", help="hidden layer widths")
    fit.add_argument("--cost", choices=("logdet", "ols", "gls"), default="logdet")
    fit.add_argument("--gamma", help="JSON file with the GLS weighting matrix "
                                     "(a truth.json works)")
    fit.add_argument("--method", choices=("quasi_newton", "damped_newton"),
                     default="quasi_newton")
    fit.add_argument("--restarts", type=int, default=10)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--max-iters", type=int, default=5000)
    fit.add_argument("--grad-tol", type=float, default=1e-6)
    fit.add_argument("--cost-tol", type=float, default=1e-10)
    fit.add_argument("--warm-start", help="weights JSON to start restart 0 from")
    fit.add_argument("--out", default=".", help="output directory")

    chk = sub.add_parser("gradcheck", help="finite-difference derivative check")
    chk.add_argument("--trials", type=int, default=100)
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--q", type=int, help="fix the input dimension")
    chk.add_argument("--hidden", type=int, nargs="+", metavar="WIDTH",
                     help="fix the hidden widths")
    chk.add_argument("--d", type=int, help="fix the output dimension")

    mc = sub.add_parser("montecarlo", help="estimator comparison study")
    mc.add_argument("config", help="experiment config file")
    mc.add_argument("--out", default=".", help="output directory")
    mc.add_argument("--threads", type=int, default=0,
                    help="worker processes (default: from config, else 1)")
    mc.add_argument("--no-figures", action="store_true",
                    help="skip PNG rendering")
    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "gradcheck": cmd_gradcheck,
    "montecarlo": cmd_montecarlo,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DimensionMismatch, NotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AllRestartsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        for line in exc.failure_log:
            print(f"  {line}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


def console_entry() -> None:
    sys.exit(main())
