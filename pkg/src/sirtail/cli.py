"""Command-line experiment runner.

Commands: ``tail``, ``constant``, ``bounds``, ``counterexample`` and
``validate``.  Settings come from flags or a TOML file given by
``--config`` (flags win).  Exit codes: 0 ok, 2 configuration error,
3 validation failure, 4 numerical failure.
"""

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance, asymquad, sirmc, voronoi
from . import io as sio
from .exceptions import ConditionViolatedError, ConfigError, InvalidParameterError, QuadratureError, SamplerStallError
from .fading import GammaFading, condition_b_params
from .models import Ginibre, LatticeMix, Poisson
from .validation import check_beta, check_count, check_fading, check_model, check_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

THREADS_ENV = "SIRTAIL_THREADS"

DEFAULTS = {
    "model": "poisson:1.0",
    "fading": "rayleigh",
    "beta": 2.0,
    "n_points": 500,
    "method": "both",
    "a": 1.5,
    "output_dir": ".",
    "abs_tol": None,
    "rel_tol": None,
    "theta": None,
    "r": None,
    "criteria": None,
}
# replicate counts depend on the command
N_SAMPLES = {"tail": 10**6, "constant": 10**5, "bounds": 10**4, "counterexample": 10**5, "validate": None}
CONFIG_KEYS = set(DEFAULTS) | {"seed", "n_samples", "threads"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="sirtail", description="SIR tail asymptotics experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, help="experiment seed (required, here or in the config file)")
        p.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV}); results do not depend on it")
        p.add_argument("--config", type=Path, help="TOML file with default settings; flags override it")
        p.add_argument("--output-dir", help="directory for CSV/JSON artifacts")
        p.add_argument("--quiet", action="store_true", help="do not print the summary table")
        return p

    def sim(p):
        p.add_argument("--model", help="poisson:LAMBDA | ginibre | lattice:A")
        p.add_argument("--fading", help="rayleigh | deterministic | nakagami:M | gamma:SHAPE,SCALE")
        p.add_argument("--beta", type=float, help="path-loss half-exponent (> 1)")
        p.add_argument("--n-samples", type=int, help="Monte Carlo replicates")
        p.add_argument("--n-points", type=int, help="base stations kept per replicate")
        return p

    p = sim(common(sub.add_parser("tail", help="Monte Carlo estimate of P(SIR > theta)")))
    p.add_argument("--theta", help="comma-separated thresholds (default: 20 log-spaced in [10, 1e5])")

    p = sim(common(sub.add_parser("constant", help="asymptotic constant of the SIR tail")))
    p.add_argument("--method", choices=("closed-form", "quadrature", "palm-mc", "both"))
    p.add_argument("--abs-tol", type=float, help="quadrature absolute tolerance")
    p.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")

    p = common(sub.add_parser("bounds", help="circumscribed-radius survival and its bounds"))
    p.add_argument("--model", help="poisson:LAMBDA | ginibre | lattice:A")
    p.add_argument("--n-samples", type=int, help="number of typical cells")
    p.add_argument("--r", help="comma-separated radii (default: 0.05 to 3 in steps of 0.05)")

    p = common(sub.add_parser("counterexample", help="condition (A) failure of the mixed lattice"))
    p.add_argument("--a", type=float, help="Pareto shape of the Palm spacing, 1 < a < 2")
    p.add_argument("--n-samples", type=int, help="largest running-mean sample size")

    p = common(sub.add_parser("validate", help="run the acceptance suite"))
    p.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    return parser


# --------------------------------------------------------------------------
# configuration


def load_toml(path):
    import tomli

    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    out = {}
    for key, value in data.items():
        norm = key.replace("-", "_")
        if norm not in CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown field {key!r}")
        out[norm] = value
    return out


def resolve(args):
    """Merge flags, config file, environment and defaults into one settings dict."""
    file_cfg = load_toml(args.config) if args.config else {}
    cfg = {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
        elif key in file_cfg:
            cfg[key] = file_cfg[key]
        elif key == "n_samples":
            cfg[key] = N_SAMPLES[args.command]
        else:
            cfg[key] = DEFAULTS.get(key)
    if cfg["threads"] is None:
        env = os.environ.get(THREADS_ENV)
        try:
            cfg["threads"] = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if cfg["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    if cfg["seed"] is None:
        raise ConfigError("seed is required (--seed or 'seed' in the config file)")
    try:
        cfg["seed"] = check_seed(cfg["seed"])
    except InvalidParameterError as exc:
        raise ConfigError(f"field 'seed': {exc}") from None
    cfg["quiet"] = args.quiet
    return cfg


def _float_list(text, name):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        items = text
    else:
        items = [s for s in str(text).split(",") if s.strip()]
    try:
        return np.array([float(s) for s in items])
    except ValueError:
        raise ConfigError(f"field {name!r}: expected comma-separated numbers, got {text!r}") from None


def _int_list(text, name):
    vals = _float_list(text, name)
    if vals is None:
        return None
    if not np.all(vals == np.round(vals)):
        raise ConfigError(f"field {name!r}: expected integers")
    return [int(v) for v in vals]


def _field(cfg, key, check):
    try:
        return check(cfg[key])
    except (InvalidParameterError, ConditionViolatedError) as exc:
        raise ConfigError(f"field {key!r}: {exc}") from None


def _emit(cfg, lines):
    if not cfg["quiet"]:
        for line in lines:
            print(line)


# --------------------------------------------------------------------------
# commands


def cmd_tail(cfg):
    model = _field(cfg, "model", check_model)
    fading = _field(cfg, "fading", check_fading)
    theta = _float_list(cfg["theta"], "theta")
    curve = sirmc.estimate_sir_tail(model, fading, cfg["beta"], theta, cfg["n_samples"], cfg["n_points"],
                                    cfg["seed"], cfg["threads"])
    out = Path(cfg["output_dir"])
    sio.write_tail_csv(out / "tail.csv", curve)
    sio.write_json(out / "tail.json", curve)
    lines = [f"{'theta':>12} {'p_hat':>12} {'ci_low':>12} {'ci_high':>12} {'scaled':>12}"]
    lines += [" ".join(f"{sio.fmt(v):>12}" for v in row) for row in curve.entries]
    _emit(cfg, lines)
    return EXIT_OK


def _quadrature(model, fading, beta, cfg):
    if isinstance(model, Poisson):
        return asymquad.poisson_constant(beta)
    if not isinstance(model, Ginibre):
        raise ConfigError("field 'model': deterministic constants exist for poisson and ginibre only")
    qcfg = asymquad.QuadConfig()
    overrides = {k: float(cfg[k]) for k in ("abs_tol", "rel_tol") if cfg[k] is not None}
    if overrides:
        try:
            qcfg = asymquad.QuadConfig(**overrides)
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from None
    # Nakagami laws (unit mean Gamma) use the Beta-function form
    if isinstance(fading, GammaFading) and math.isclose(fading.shape * fading.scale, 1.0):
        return asymquad.ginibre_nakagami_constant(beta, fading.shape, qcfg)
    return asymquad.ginibre_constant(fading, beta, qcfg)


def cmd_constant(cfg):
    model = _field(cfg, "model", check_model)
    fading = _field(cfg, "fading", check_fading)
    beta = _field(cfg, "beta", check_beta)
    method = cfg["method"]
    if method not in ("closed-form", "quadrature", "palm-mc", "both"):
        raise ConfigError(f"field 'method': unknown method {method!r}")
    if method == "closed-form" and not isinstance(model, Poisson):
        raise ConfigError("field 'method': a closed form exists for the poisson model only")
    _field(cfg, "fading", lambda f: condition_b_params(fading, beta))

    entries = {}
    if method in ("closed-form", "quadrature", "both"):
        est = _quadrature(model, fading, beta, cfg)
        entries[est.method] = est
    if method in ("palm-mc", "both"):
        entries["palm-mc"] = sirmc.estimate_palm_constant(model, fading, beta, cfg["n_samples"], cfg["n_points"],
                                                          cfg["seed"], cfg["threads"])
    report = {"model": model.to_dict(), "fading": fading.to_dict(), "beta": beta,
              "entries": {k: v.to_dict() for k, v in entries.items()}}
    if len(entries) == 2:
        det = next(v for k, v in entries.items() if k != "palm-mc")
        mc = entries["palm-mc"]
        gap = mc.value - det.value
        report["gap"] = gap
        report["gap_std_errors"] = abs(gap) / mc.std_error if mc.std_error > 0 else math.inf
    out = Path(cfg["output_dir"])
    sio.write_json(out / "constant.json", report)
    sio.write_constant_csv(out / "constant.csv", list(entries.values()))
    lines = [f"{'method':>12} {'value':>12} {'std_error':>12} {'low':>12} {'high':>12}"]
    for k, v in entries.items():
        lines.append(f"{k:>12} " + " ".join(f"{sio.fmt(x):>12}" for x in
                                             (v.value, v.std_error, v.bracket_low, v.bracket_high)))
    if "gap" in report:
        lines.append(f"gap {sio.fmt(report['gap'])} ({sio.fmt(report['gap_std_errors'])} std errors)")
    _emit(cfg, lines)
    return EXIT_OK


DEFAULT_R = np.round(np.arange(0.05, 3.0001, 0.05), 10)


def bounds_table(model, sample, r):
    """Columns of the bounds CSV for a radius sample."""
    p, _, hi = sample.survival(r)
    lam = model.intensity
    calka, calka_ok = voronoi.calka_poisson_bound(lam, r)
    petal = voronoi.ginibre_petal_bound(r)
    generic = voronoi.generic_petal_bound(lam, r)
    is_poisson = isinstance(model, Poisson)
    is_ginibre = isinstance(model, Ginibre)
    return {
        "r": r,
        "empirical": p,
        "ci_high": hi,
        "calka": calka,
        "ginibre_petal": petal,
        "generic_petal": generic,
        "calka_valid": np.asarray(calka_ok) & is_poisson,
        "ginibre_petal_valid": np.full(r.shape, is_ginibre),
        "generic_petal_valid": np.full(r.shape, is_poisson or is_ginibre),
    }


def cmd_bounds(cfg):
    model = _field(cfg, "model", check_model)
    r = _float_list(cfg["r"], "r")
    r = DEFAULT_R if r is None else r
    if np.any(r <= 0):
        raise ConfigError("field 'r': radii must be > 0")
    n = _field(cfg, "n_samples", lambda v: check_count(v, "n_samples"))
    sample = voronoi.circumscribed_radius_samples(model, n, cfg["seed"], n_jobs=cfg["threads"])
    table = bounds_table(model, sample, r)
    out = Path(cfg["output_dir"])
    sio.write_bounds_csv(out / "bounds.csv", table)
    report = {
        "model": model.to_dict(),
        "n_samples": n,
        "seed": cfg["seed"],
        "kept": int(sample.radii.size),
        "discarded": sample.discarded,
        "discard_rate": sample.discard_rate,
        "window_radius": sample.window_radius,
        "ginibre_petal_crossing": voronoi.ginibre_petal_crossing(),
        "calka_validity": "r * sqrt(lambda) >= 0.337",
        "table": table,
    }
    sio.write_json(out / "bounds.json", report)
    lines = [f"{'r':>8} {'empirical':>12} {'ci_high':>12} {'calka':>12} {'gin_petal':>12} {'gen_petal':>12}"]
    for i in range(r.size):
        lines.append(" ".join(f"{sio.fmt(table[c][i]):>{w}}" for c, w in
                              (("r", 8), ("empirical", 12), ("ci_high", 12), ("calka", 12), ("ginibre_petal", 12),
                               ("generic_petal", 12))))
    lines.append(f"discarded {sample.discarded} of {n}")
    _emit(cfg, lines)
    return EXIT_OK


def cmd_counterexample(cfg):
    try:
        model = LatticeMix(cfg["a"])
    except InvalidParameterError as exc:
        raise ConfigError(f"field 'a': {exc}") from None
    n = _field(cfg, "n_samples", lambda v: check_count(v, "n_samples"))
    checkpoints = [c for c in (10**3, 10**4, 10**5) if c <= n] or [n]
    rep = voronoi.condition_a_report(model, n, cfg["seed"], checkpoints)
    ident = voronoi.lattice_palm_identity(model.a, n, cfg["seed"])
    report = {"seed": cfg["seed"], "condition_a": rep.to_dict(), "details": rep.details,
              "palm_identity": ident.to_dict()}
    sio.write_json(Path(cfg["output_dir"]) / "counterexample.json", report)
    lines = [f"{'n':>8} {'mean R(o)^2':>14} {'median over chains':>20}"]
    for c, x, y in zip(rep.checkpoints, rep.radius_means, rep.details["median_running_mean_R2"]):
        lines.append(f"{c:>8} {sio.fmt(x):>14} {sio.fmt(y):>20}")
    lines.append(f"verdict: {rep.verdict}; analytic: {rep.analytic}")
    lines.append(f"Palm identity: {sio.fmt(ident.quadrature)} vs {sio.fmt(ident.monte_carlo)} "
                 f"({sio.fmt(ident.n_se)} std errors)")
    _emit(cfg, lines)
    return EXIT_OK


def cmd_validate(cfg):
    numbers = _int_list(cfg["criteria"], "criteria")
    if numbers and any(k not in acceptance.CRITERIA for k in numbers):
        raise ConfigError(f"field 'criteria': criteria are numbered 1 to {len(acceptance.CRITERIA)}")
    callback = None if cfg["quiet"] else (lambda res: print(res.line(), flush=True))
    results = acceptance.run_criteria(numbers, cfg["seed"], cfg["threads"], callback)
    sio.write_json(Path(cfg["output_dir"]) / "validate.json",
                   {"seed": cfg["seed"], "results": [r.to_dict() for r in results]})
    failed = [r.number for r in results if not r.passed]
    _emit(cfg, [f"{len(results) - len(failed)}/{len(results)} criteria passed"])
    return EXIT_VALIDATION if failed else EXIT_OK


HANDLERS = {
    "tail": cmd_tail,
    "constant": cmd_constant,
    "bounds": cmd_bounds,
    "counterexample": cmd_counterexample,
    "validate": cmd_validate,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, InvalidParameterError, ConditionViolatedError) as exc:
        print(f"sirtail: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, SamplerStallError) as exc:
        print(f"sirtail: numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"sirtail: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
