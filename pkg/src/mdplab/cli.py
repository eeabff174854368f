"""
Command-line experiment runner.

``mdp-lab run CONFIG`` executes a full pipeline from a JSON config; the other
subcommands expose single steps.  Exit codes: 0 success, 2 configuration
error, 3 degenerate variance (partial results), 4 numerical instability
(partial results).
"""

import argparse
import json
import math
import os
import sys
import time
from importlib import resources

import numpy as np

from . import funcs, mdp, records, rng
from .errors import ConfigError, DegenerateModelError, MDPLabError, SubsamplingExhausted, ValidationError
from .process import models, spectral

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_UNSTABLE = 0, 2, 3, 4
SEED_ENV = "MDP_LAB_SEED"
ESTIMATORS = ("assumptions", "variance", "cgf", "tails", "surgery")


# -- config ------------------------------------------------------------------------


def bundled_config(name):
    """Path of a config shipped with the package (e.g. ``whitenoise_linear.json``)."""
    return str(resources.files("mdplab") / "configs" / name)


def load_config(path):
    if not os.path.exists(path):
        alt = bundled_config(os.path.basename(path))
        if not os.path.exists(alt):
            raise ConfigError(f"config file not found: {path}")
        path = alt
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg.setdefault("_path", os.path.abspath(path))
    validate_config(cfg)
    return cfg


def _need(d, key, where):
    if key not in d:
        raise ConfigError(f"missing '{key}' in {where}")
    return d[key]


def validate_config(cfg):
    model = _need(cfg, "model", "config")
    fn = _need(cfg, "function", "config")
    mtype = _need(model, "type", "model")
    if mtype not in ("power-law", "white-noise", "inline", "file", "spectral-file", "ct-power-law"):
        raise ConfigError(f"unknown model type {mtype!r}")
    base = os.path.dirname(cfg.get("_path", "."))
    for key in ("path",):
        if key in model:
            p = model[key] if os.path.isabs(model[key]) else os.path.join(base, model[key])
            if not os.path.exists(p):
                raise ConfigError(f"referenced file does not exist: {model[key]}")
    if fn.get("kind") not in funcs.KINDS:
        raise ConfigError(f"unknown function kind {fn.get('kind')!r}")
    est = cfg.get("estimators", {})
    unknown = set(est) - set(ESTIMATORS)
    if unknown:
        raise ConfigError(f"unknown estimators: {sorted(unknown)}")
    for name in ("cgf", "tails"):
        if name in est:
            beta = _need(est[name], "beta", f"estimators.{name}")
            if not 0 < beta < 0.5:
                raise ConfigError(f"estimators.{name}.beta must lie in (0, 0.5)")
    d_model = model.get("d", model.get("dim"))
    if d_model is not None and fn.get("d") is not None and int(d_model) != int(fn["d"]):
        raise ConfigError(f"model dimension {d_model} != function dimension {fn['d']}")


def build_model(spec, base="."):
    t = spec["type"]
    try:
        if t == "white-noise":
            return models.white_noise(int(spec["d"]))
        if t == "power-law":
            return models.power_law_model(int(spec["d"]), float(spec["eps"]), int(spec["J"]), int(spec.get("seed", 0)))
        if t == "inline":
            return models.model_from_dict(spec)
        path = spec.get("path")
        if path is not None and not os.path.isabs(path):
            path = os.path.join(base, path)
        if t == "file":
            return models.load_model(path)
        if t == "spectral-file":
            f = spectral.read_spectral_csv(path)
            return spectral.coeffs_from_spectral(f, int(spec["J"]), float(spec["eps"]))
        if t == "ct-power-law":
            d, eps = int(spec["d"]), float(spec["eps"])
            return models.ct_model_from_kernel(lambda s: (abs(s) + 1.0) ** (-1.5 - eps), d,
                                               float(spec["h"]), int(spec["S"]), eps)
    except KeyError as exc:
        raise ConfigError(f"model spec of type {t!r} is missing {exc}") from exc
    raise ConfigError(f"unknown model type {t!r}")


def build_function(spec):
    return funcs.make_function(spec["kind"], int(spec["d"]), int(spec.get("budget", 1_000_000)),
                               int(spec.get("seed", 0)))


def _default_x_grid(d):
    # the origin plus +-0.5 along each of the first two axes, and the diagonals
    pts = [np.zeros(d)]
    for a in range(min(d, 2)):
        for s in (0.5, -0.5):
            e = np.zeros(d)
            e[a] = s
            pts.append(e)
    if d >= 2:
        for s1 in (0.5, -0.5):
            for s2 in (0.5, -0.5):
                e = np.zeros(d)
                e[0], e[1] = s1, s2
                pts.append(e)
    return np.array(pts)


# -- pipeline ----------------------------------------------------------------------


def _fmt(x, digits=5):
    if x is None:
        return "-"
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return f"{x:.{digits}g}"


def print_table(title, header, rows, out=sys.stdout):
    cells = [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h) for i, h in enumerate(header)]
    print(f"\n{title}", file=out)
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)), file=out)
    for c in cells:
        print("  ".join(v.rjust(w) for v, w in zip(c, widths)), file=out)


def run_pipeline(cfg, seed, out_dir, threads=None, quiet=False):
    """Run every configured estimator; returns (record, exit_code)."""
    t0 = time.time()
    base = os.path.dirname(cfg.get("_path", "."))
    echo = {k: v for k, v in cfg.items() if not k.startswith("_")}
    os.makedirs(out_dir, exist_ok=True)
    model = build_model(cfg["model"], base)
    F = build_function(cfg["function"])
    if model.dim != F.dim:
        raise ConfigError(f"model dimension {model.dim} != function dimension {F.dim}")
    est = cfg.get("estimators", {})
    step = cfg["model"].get("step")
    out = sys.stdout if not quiet else open(os.devnull, "w")
    results, tables, flags, reps = {}, [], {}, {}
    code = EXIT_OK

    info = {"dim": model.dim}
    if isinstance(model, models.MAModel):
        info.update(halfwidth=model.halfwidth, tail_bound=model.tail_bound,
                    truncation_tail=model.truncation_tail(), normalization_error=model.normalization_error())
    else:
        info.update(support=model.support, grid_step=model.grid_step, holder_quotient=model.holder_quotient(),
                    normalization_error=model.normalization_error(), step=step or model.grid_step)
    results["model"] = info
    print(f"model: {cfg['model']['type']} (d={model.dim}); function: {F.label}; seed {seed}", file=out)

    if "assumptions" in est:
        a = est["assumptions"]
        xg = np.array(a["x_grid"], dtype=float) if "x_grid" in a else _default_x_grid(F.dim)
        rep = funcs.estimate_smoothness_constant(F, xg, a.get("r_grid", [0.01, 0.05, 0.1, 0.5, 1.0]),
                                                 int(a.get("budget", 100_000)), seed)
        ei = funcs.check_exp_integrability(F, int(a.get("budget", 100_000)), seed)
        tables.append(("assumptions.csv", rep.rows, ["x_index", "r", "I_hat", "stderr", "ln_I_over_r"]))
        results["assumptions"] = {"C_hat": rep.C_hat, "exp_plus": ei.mean_exp_plus, "exp_minus": ei.mean_exp_minus,
                                  "exp_plus_se": ei.stderr_plus, "exp_minus_se": ei.stderr_minus,
                                  "exp_stable": ei.stable}
        print_table("assumption checks", ["C_hat", "E e^F", "E e^-F", "stable"],
                    [[rep.C_hat, ei.mean_exp_plus, ei.mean_exp_minus, ei.stable]], out)

    sigma_hat = None
    if "variance" in est:
        v = est["variance"]
        ve = mdp.estimate_sigma2(model, F, v["n_grid"], int(v["M"]), seed, step, threads)
        sigma_hat = ve.sigma_hat
        reps["variance"] = ve.replicates
        tables.append(("variance.csv", ve.rows(), ["n", "sigma_n", "sigma2_n", "stderr"]))
        results["variance"] = {"n_grid": ve.n_grid, "sigma2_n": ve.sigma2_n, "stderrs": ve.stderrs,
                               "sigma2_limit": ve.sigma2_limit, "sigma2_limit_se": ve.sigma2_limit_se,
                               "radius": ve.radius, "degenerate": ve.degenerate}
        flags["degenerate_sigma"] = ve.degenerate
        rows = [[n, s2, e] for n, s2, e in zip(ve.n_grid, ve.sigma2_n, ve.stderrs)]
        header = ["n", "sigma2_n", "SE"]
        if cfg["model"]["type"] == "white-noise" and F.kind == "linear-coordinate":
            # exact case: sigma^2 = 1
            rows = [r + [(r[1] - 1.0) / r[2]] for r in rows]
            header.append("(x-1)/SE")
        print_table("variance  E S_n^2 / n", header, rows, out)
        if ve.degenerate:
            code = EXIT_DEGENERATE
            print("sigma^2 indistinguishable from 0: skipping scaled estimators", file=out)

    if code != EXIT_DEGENERATE and "cgf" in est:
        c = est["cgf"]
        sig = sigma_hat if sigma_hat is not None else c.get("sigma")
        ce = mdp.estimate_scaled_cgf(model, F, c["beta"], c["lambda_grid"], c["n_grid"], int(c["M"]), seed,
                                     sig, c.get("eps1", mdp.estimators.DEFAULT_EPS1), step, threads)
        reps["cgf"] = ce.replicates
        rows = ce.rows()
        tables.append(("cgf.csv", rows, list(rows[0].keys())))
        results["cgf"] = {"beta": ce.beta, "lambda_grid": ce.lambda_grid, "n_grid": ce.n_grid, "values": ce.values,
                          "stderrs": ce.stderrs, "ess": ce.ess, "in_window": ce.in_window, "unstable": ce.unstable,
                          "sigma_hat": ce.sigma_hat, "sigma_hat_se": ce.sigma_hat_se, "eps1": ce.eps1,
                          "a_n": ce.a_n, "b_n": ce.b_n}
        bad = bool(np.any(ce.unstable & ce.in_window))
        flags["cgf_unstable"] = bad
        if bad:
            code = EXIT_UNSTABLE
        table = [[r["n"], r["lambda"], r["Lambda_hat"], r["target"], r["stderr"],
                  (r["Lambda_hat"] - r["target"]) / r["stderr"] if r["stderr"] > 0 else 0.0,
                  r["in_window"], r["unstable"]] for r in rows]
        print_table(f"scaled CGF (beta={ce.beta}, sigma_hat={ce.sigma_hat:.5g})",
                    ["n", "lambda", "Lambda_hat", "lam^2/2", "SE", "dist/SE", "window", "unstable"], table, out)

    if code != EXIT_DEGENERATE and "tails" in est:
        t = est["tails"]
        sig = sigma_hat if sigma_hat is not None else float(t.get("sigma", 1.0))
        te = mdp.estimate_tail_rate(model, F, t["beta"], t["c"], t["n_grid"], int(t["M"]), seed, sig, step, threads)
        reps["tails"] = te.replicates
        rows = te.rows()
        tables.append(("tails.csv", rows, list(rows[0].keys())))
        results["tails"] = {"beta": te.beta, "c": te.c, "n_grid": te.n_grid, "rates": te.rates,
                            "lower_rates": te.lower_rates, "stderrs": te.stderrs, "hits": te.hits,
                            "lower_hits": te.lower_hits, "rate_upper_bounds": te.rate_bounds,
                            "under_sampled": te.under_sampled, "sigma_hat": te.sigma_hat}
        flags["tails_under_sampled"] = bool(np.any(te.under_sampled))
        table = [[r["n"], r["rate"], r["lower_rate"], r["target"], r["rate"] - r["target"], r["hits"],
                  r["under_sampled"]] for r in rows]
        print_table(f"tail rates (beta={te.beta}, c={te.c})",
                    ["n", "upper", "lower", "-c^2/2", "upper-target", "hits", "under-sampled"], table, out)

    if "surgery" in est:
        s = est["surgery"]
        sd = mdp.surgery_diagnostics(model, F, s["n_grid"], int(s["M"]), float(s.get("eps", 0.1)), seed,
                                     sigma_hat, float(s.get("cap", 1e6)), step, threads)
        reps["surgery"] = sd.replicates
        tables.append(("surgery.csv", sd.rows(), list(sd.rows()[0].keys())))
        results["surgery"] = {"n_grid": sd.n_grid, "eps": sd.eps, "moments": sd.moment_estimates,
                              "stderrs": sd.stderrs, "past_moments": sd.past_moment_estimates,
                              "identity_residuals": sd.identity_residuals, "diverging": sd.diverging,
                              "remainder_const": sd.remainder_const}
        flags["surgery_diverging"] = bool(np.any(sd.diverging))
        print_table(f"surgery (eps={sd.eps})", ["n", "E exp(eps|D|)", "SE", "residual", "C_rem"],
                    [[r["n"], r["moment"], r["stderr"], r["max_identity_residual"], r["remainder_const"]]
                     for r in sd.rows()], out)

    written = []
    for name, rows, cols in tables:
        records.write_table(os.path.join(out_dir, name), rows, cols)
        written.append(name)
    record = {
        "config": echo,
        "seed": int(seed),
        "results": results,
        "flags": flags,
        "replicates": reps,
        "tables": written,
        "exit_code": code,
        "runtime": {"wall_clock_s": time.time() - t0, "threads": threads or rng.default_threads()},
    }
    record = records.write_record(os.path.join(out_dir, "record.json"), record)
    print(f"\nwrote {len(written)} tables and record.json to {out_dir} (hash {record['content_hash'][:16]})", file=out)
    if quiet:
        out.close()
    return record, code


# -- argument handling ---------------------------------------------------------------


def resolve_seed(arg, cfg=None):
    if arg is not None:
        return int(arg)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    if cfg is not None and "seed" in cfg:
        return int(cfg["seed"])
    return 0


def _common(p):
    p.add_argument("--seed", type=int, default=None, help=f"master seed (fallback: ${SEED_ENV}, then config)")
    p.add_argument("--out", default=None, help="output file or directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads (never changes results)")


def _model_args(p):
    p.add_argument("--model", help="model JSON file (default: power-law model from --d/--eps/--J)")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--J", type=int, default=64)
    p.add_argument("--model-seed", type=int, default=0)
    p.add_argument("--kind", default="log-norm", choices=funcs.KINDS)


def _ints(s):
    return [int(v) for v in s.split(",") if v]


def _floats(s):
    return [float(v) for v in s.split(",") if v]


def _model_from_args(a):
    if a.model:
        return models.load_model(a.model)
    if a.J == 0:
        return models.white_noise(a.d)
    return models.power_law_model(a.d, a.eps, a.J, a.model_seed)


def _out_path(a, default):
    return a.out or default


def cmd_run(a):
    cfg = load_config(a.config)
    seed = resolve_seed(a.seed, cfg)
    name = cfg.get("name", os.path.splitext(os.path.basename(a.config))[0])
    _, code = run_pipeline(cfg, seed, _out_path(a, os.path.join("results", name)), a.threads)
    return code


def cmd_synthesize(a):
    if a.spectral:
        m = spectral.coeffs_from_spectral(spectral.read_spectral_csv(a.spectral), a.J, a.eps)
    else:
        m = _model_from_args(a)
    path = _out_path(a, "model.json")
    m.to_json(path)
    print(f"d={m.dim} J={m.halfwidth} tail_bound={m.tail_bound:.6g} "
          f"truncation_tail={m.truncation_tail():.3g} normalization_error={m.normalization_error():.2e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check_f(a):
    try:
        F = funcs.make_function(a.kind, a.d, a.budget, resolve_seed(a.seed))
    except ValidationError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        if a.kind == "log-norm" and a.d == 1:
            print("run with --probe to tabulate the divergence of the d=1 envelope integral", file=sys.stderr)
            if a.probe:
                probe = funcs.violation_probe_1d_log(_floats(a.r_grid), a.budget, resolve_seed(a.seed))
                probe.to_csv(_out_path(a, "violation_probe.csv"))
                print_table("d=1 probe", ["r", "ln I / r (quadrature)", "ln I / r (MC)"],
                            [[r["r"], r["ln_I_over_r"], r["ln_I_over_r_mc"]] for r in probe.rows])
        return EXIT_CONFIG
    seed = resolve_seed(a.seed)
    rep = funcs.estimate_smoothness_constant(F, _default_x_grid(a.d), _floats(a.r_grid), a.budget, seed)
    path = _out_path(a, "check_f.csv")
    rep.to_csv(path)
    ei = funcs.check_exp_integrability(F, a.budget, seed)
    print_table(f"envelope integral for {F.label}", ["x_index", "r", "I_hat", "SE", "ln I / r"],
                [[r["x_index"], r["r"], r["I_hat"], r["stderr"], r["ln_I_over_r"]] for r in rep.rows])
    print(f"\nC_hat = {rep.C_hat:.6g} (empirical lower bound over the grid)")
    print(f"E e^F = {ei.mean_exp_plus:.6g} +- {ei.stderr_plus:.2g}, E e^-F = {ei.mean_exp_minus:.6g} "
          f"+- {ei.stderr_minus:.2g}, stabilized: {ei.stable}")
    print(f"wrote {path}")
    return EXIT_OK


def _pipeline_cmd(a, estimators):
    cfg = {"model": {"type": "file", "path": os.path.abspath(a.model)} if a.model else
           ({"type": "white-noise", "d": a.d} if a.J == 0 else
            {"type": "power-law", "d": a.d, "eps": a.eps, "J": a.J, "seed": a.model_seed}),
           "function": {"kind": a.kind, "d": a.d}, "estimators": estimators}
    if a.model:
        cfg["function"]["d"] = models.load_model(a.model).dim
    validate_config(cfg)
    seed = resolve_seed(a.seed)
    _, code = run_pipeline(cfg, seed, _out_path(a, "results"), a.threads)
    return code


def cmd_variance(a):
    return _pipeline_cmd(a, {"variance": {"n_grid": _ints(a.n_grid), "M": a.M}})


def cmd_cgf(a):
    est = {"cgf": {"beta": a.beta, "lambda_grid": _floats(a.lambdas), "n_grid": _ints(a.n_grid), "M": a.M,
                   "eps1": a.eps1}}
    if a.sigma is None:
        est["variance"] = {"n_grid": _ints(a.n_grid), "M": max(100, a.M // 4)}
    else:
        est["cgf"]["sigma"] = a.sigma
    return _pipeline_cmd(a, est)


def cmd_tails(a):
    est = {"tails": {"beta": a.beta, "c": a.c, "n_grid": _ints(a.n_grid), "M": a.M}}
    if a.sigma is None:
        est["variance"] = {"n_grid": _ints(a.n_grid), "M": max(100, a.M // 10)}
    else:
        est["tails"]["sigma"] = a.sigma
    return _pipeline_cmd(a, est)


def cmd_surgery(a):
    return _pipeline_cmd(a, {"surgery": {"n_grid": _ints(a.n_grid), "M": a.M, "eps": a.eps_surgery}})


def cmd_spectral(a):
    m = _model_from_args(a)
    f = spectral.spectral_from_coeffs(m, a.K)
    if a.min_subsampling is not None:
        try:
            k = spectral.min_subsampling(f, a.min_subsampling, a.m_max)
        except SubsamplingExhausted as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_UNSTABLE
        print(f"smallest m with f_m >= sigma^2/(2 pi) I: {k}")
    if a.subsample and a.subsample > 1:
        f = spectral.subsampled_spectral(f, a.subsample)
    path = _out_path(a, "spectral.csv" if not a.subsample else f"spectral_m{a.subsample}.csv")
    f.to_csv(path)
    lo = float(np.min(f.min_eigenvalues()))
    print(f"K={f.K} min eigenvalue {lo:.6g} (x 2 pi = {2 * math.pi * lo:.6g}); "
          f"resampled={f.metadata.get('resampled', False)}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="mdp-lab", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("run", help="run a JSON experiment config")
    q.add_argument("config")
    _common(q)
    q.set_defaults(func=cmd_run)

    q = sub.add_parser("synthesize", help="write a normalized model JSON")
    _model_args(q)
    q.add_argument("--spectral", help="spectral CSV to factorize instead of a power-law model")
    _common(q)
    q.set_defaults(func=cmd_synthesize)

    q = sub.add_parser("check-f", help="envelope and exponential-integrability checks for F")
    q.add_argument("--kind", default="log-norm", choices=funcs.KINDS)
    q.add_argument("--d", type=int, default=2)
    q.add_argument("--r-grid", default="0.01,0.05,0.1,0.5,1")
    q.add_argument("--budget", type=int, default=200_000)
    q.add_argument("--probe", action="store_true", help="with --kind log-norm --d 1: tabulate the violation")
    _common(q)
    q.set_defaults(func=cmd_check_f)

    for name, fn, helptext in (("variance", cmd_variance, "asymptotic variance"),
                               ("cgf", cmd_cgf, "scaled cumulant generating function"),
                               ("tails", cmd_tails, "scaled tail log-probabilities"),
                               ("surgery", cmd_surgery, "noise-swap difference moments")):
        q = sub.add_parser(name, help=helptext)
        _model_args(q)
        q.add_argument("--n-grid", default="64,256,1024")
        q.add_argument("-M", type=int, default=10_000)
        if name in ("cgf", "tails"):
            q.add_argument("--beta", type=float, default=0.25)
            q.add_argument("--sigma", type=float, default=None, help="known sigma (skips the variance step)")
        if name == "cgf":
            q.add_argument("--lambdas", default="-0.5,-0.25,0,0.25,0.5")
            q.add_argument("--eps1", type=float, default=mdp.estimators.DEFAULT_EPS1)
        if name == "tails":
            q.add_argument("--c", type=float, default=1.0)
        if name == "surgery":
            q.add_argument("--eps-surgery", type=float, default=0.1)
        _common(q)
        q.set_defaults(func=fn)

    q = sub.add_parser("spectral", help="spectral density grid (optionally subsampled) as CSV")
    _model_args(q)
    q.add_argument("--K", type=int, default=spectral.DEFAULT_K)
    q.add_argument("--subsample", type=int, default=None)
    q.add_argument("--min-subsampling", type=float, default=None, metavar="SIGMA")
    q.add_argument("--m-max", type=int, default=256)
    _common(q)
    q.set_defaults(func=cmd_spectral)
    return p


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    if getattr(a, "threads", None):
        os.environ["MDP_LAB_THREADS"] = str(a.threads)
    try:
        return a.func(a)
    except (ConfigError, ValidationError, DegenerateModelError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MDPLabError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
