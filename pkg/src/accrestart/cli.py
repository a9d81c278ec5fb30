"""Command-line front end: ``solve``, ``rates``, ``sweep`` and ``make-reference``.

Every subcommand accepts ``--config FILE``, an INI file whose ``key = value``
entries (in any section) mirror the long flags with dashes written as
underscores. Flags given on the command line override the file. Unknown
keys are rejected.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import data_io, schedule
from .problems import lasso_problem, logistic_problem
from .restart import (
    ApproxCombination,
    ConditionalAtX,
    ConditionalAtZ,
    FixedCombination,
    FunctionValueAdaptive,
    IntervalAdaptive,
    NoRestart,
)
from .solvers import SOLVERS, NumericalError, StopRule, compute_reference, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
RESTARTS = ("none", "x", "z", "combo", "center", "adaptive", "interval")


class ConfigError(ValueError):
    pass


# -- argument parsing -----------------------------------------------------------


def _problem_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=("lasso", "logistic"))
    g.add_argument("--data", help="dataset path (LibSVM or CSV); omit for a synthetic instance")
    g.add_argument("--format", choices=("libsvm", "csv"))
    g.add_argument("--label-rule", help="identity | onevsrest:<label>")
    g.add_argument("--feature-count", type=int)
    g.add_argument("--drop-empty-columns", type=_bool, nargs="?", const=True)
    g.add_argument("--synth-n", type=int, help="synthetic Lasso: number of features")
    g.add_argument("--synth-m", type=int, help="synthetic Lasso: number of samples")
    g.add_argument("--synth-density", type=float)
    g.add_argument("--synth-cond", type=float)
    g.add_argument("--synth-seed", type=int)
    g.add_argument("--reg-weight", type=float, help="Lasso l1 weight (default ||A^T b||_inf / 10)")
    g.add_argument("--lambda1", type=float, help="logistic loss scale")
    g.add_argument("--l2", type=float, help="l2 weight (Lasso) or lambda2 (logistic)")
    g.add_argument("--reference", help="reference optimum file for gap reporting")


def _run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run")
    g.add_argument("--solver", choices=SOLVERS)
    g.add_argument("--engine", choices=("efficient", "naive"))
    g.add_argument("--restart", choices=RESTARTS)
    g.add_argument("--mu", type=float, help="strong convexity estimate")
    g.add_argument("--alpha", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--K", type=int)
    g.add_argument("--K-low", type=int)
    g.add_argument("--K-high", type=int)
    g.add_argument("--inner", choices=("adaptive", "z"))
    g.add_argument("--tau", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--budget", type=int)
    g.add_argument("--max-epochs", type=float)
    g.add_argument("--tol", type=float, help="stop once F - F* <= tol")
    g.add_argument("--record-every", type=int)


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    t = str(s).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


DEFAULTS = {
    "problem": "lasso", "format": None, "label_rule": "identity", "feature_count": None,
    "drop_empty_columns": False, "data": None, "synth_n": 20, "synth_m": 50,
    "synth_density": 1.0, "synth_cond": 1.0, "synth_seed": 0, "reg_weight": None,
    "lambda1": 1.0, "l2": 0.0, "reference": None,
    "solver": "fista", "engine": "efficient", "restart": "none", "mu": None,
    "alpha": math.exp(-2.0), "sigma": None, "K": None, "K_low": None, "K_high": None,
    "inner": "adaptive", "tau": 1, "seed": 0, "budget": 10000, "max_epochs": None,
    "tol": None, "record_every": 1,
    "out": None, "summary": None,
    "mu_grid": None, "mu_F_grid": None, "mu_F": 1e-5, "n": 10, "lambda_": None,
    "variant": "main",
    "axis": None, "values": None, "seeds": "1", "workers": 1,
    "max_iter": 10**6,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="accrestart", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    p = sub.add_parser("solve", help="run one solver and write its trace")
    p.add_argument("--config")
    _problem_flags(p)
    _run_flags(p)
    p.add_argument("--out", help="trace CSV path (stdout summary only if omitted)")

    p = sub.add_parser("rates", help="tabulate restart and coordinate descent rates")
    p.add_argument("--config")
    p.add_argument("--mu-grid", help="comma list or lo:hi:num (log-spaced) of estimates mu")
    p.add_argument("--mu-F-grid", help="comma list or lo:hi:num of true mu_F values")
    p.add_argument("--mu", type=float, help="single estimate (when sweeping mu_F)")
    p.add_argument("--mu-F", type=float, help="single true value (when sweeping mu)")
    p.add_argument("--n", type=int)
    p.add_argument("--tau", type=int)
    p.add_argument("--lambda", dest="lambda_", type=float, help="trade-off parameter (default 1+mu)")
    p.add_argument("--variant", choices=("main", "general"))
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="repeat runs over one parameter axis and several seeds")
    p.add_argument("--config")
    _problem_flags(p)
    _run_flags(p)
    p.add_argument("--axis", help="run parameter to vary, e.g. mu, sigma, K, tau")
    p.add_argument("--values", help="comma list or lo:hi:num")
    p.add_argument("--seeds", help="count N (seeds 0..N-1) or comma list")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")

    p = sub.add_parser("make-reference", help="compute and store a high-accuracy optimum")
    p.add_argument("--config")
    _problem_flags(p)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out", required=False)
    return parser


def _load_config(path, allowed: set[str]) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_string("[__top__]\n" + fh.read())
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, val in cp.items(section):
            dest = key.replace("-", "_")
            dest = {"k": "K", "k_low": "K_low", "k_high": "K_high", "lambda": "lambda_"}.get(dest, dest)
            if dest not in allowed or dest == "config":
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]".replace("[__top__]", "top level"))
            out[dest] = val
    return out


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Defaults, then the config file, then explicit flags; values typed per flag."""
    sub = parser.commands[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help",)}
    allowed = set(actions)
    cfg = {k: DEFAULTS.get(k) for k in allowed if k != "config"}
    if args.config:
        for k, raw in _load_config(args.config, allowed).items():
            act = actions[k]
            try:
                val = act.type(raw) if act.type else raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"{args.config}: bad value for {k}: {raw!r}") from exc
            if act.choices is not None and val not in act.choices:
                raise ConfigError(f"{args.config}: {k} must be one of {list(act.choices)}")
            cfg[k] = val
    for k, v in vars(args).items():
        if k in ("command", "config"):
            continue
        if v is not None:
            cfg[k] = v
    cfg["command"] = args.command
    return cfg


def parse_grid(text: str) -> list[float]:
    if text is None or not str(text).strip():
        raise ConfigError("empty grid")
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be lo:hi:num")
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        if lo <= 0 or hi <= 0 or num < 1:
            raise ConfigError(f"log grid {text!r} needs positive bounds and num >= 1")
        return list(np.geomspace(lo, hi, num))
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}") from exc
    if not vals:
        raise ConfigError("empty grid")
    return vals


# -- building blocks -----------------------------------------------------------


def build_problem(cfg: dict):
    if cfg.get("data"):
        fmt = cfg.get("format") or ("csv" if str(cfg["data"]).lower().endswith(".csv") else "libsvm")
        manifest = data_io.DatasetManifest(cfg["data"], fmt, cfg["label_rule"] or "identity",
                                           cfg.get("feature_count"), bool(cfg.get("drop_empty_columns")))
        design = data_io.load_design(manifest)
        name = Path(cfg["data"]).name
    else:
        design, _ = data_io.synth_lasso(cfg["synth_n"], cfg["synth_m"], cfg["synth_density"],
                                        cfg["synth_cond"], cfg["synth_seed"])
        name = f"synth(n={cfg['synth_n']},m={cfg['synth_m']},seed={cfg['synth_seed']})"
    if cfg["problem"] == "lasso":
        prob = lasso_problem(design, cfg.get("reg_weight"), cfg.get("l2") or 0.0)
    else:
        prob = logistic_problem(design, cfg.get("lambda1") or 1.0, cfg.get("l2") or 0.0)
    prob = replace(prob, name=name, _AT=None)
    if cfg.get("reference"):
        x, F = data_io.read_reference(cfg["reference"], prob.n)
        prob = prob.with_reference(x, F)
    return prob


def build_policy(cfg: dict, n: int):
    kind = cfg["restart"]
    solver = cfg["solver"]
    mu, sigma, K = cfg.get("mu"), cfg.get("sigma"), cfg.get("K")
    tau = cfg.get("tau") or 1
    theta0 = tau / n if solver == "approx" else 1.0
    ratio = 1.0 / theta0

    def need_mu():
        if mu is None and (sigma is None or K is None):
            raise ConfigError(f"--restart {kind} needs --mu or both --sigma and --K")

    if kind == "none":
        return NoRestart()
    if kind == "x":
        if mu is None:
            raise ConfigError("--restart x needs --mu")
        return ConditionalAtX(mu, cfg["alpha"])
    if kind == "z":
        return ConditionalAtZ()
    if kind == "adaptive":
        return FunctionValueAdaptive()
    if kind == "combo" and solver != "approx":
        need_mu()
        base = FixedCombination.from_estimate(mu) if mu is not None else None
        return FixedCombination(sigma if sigma is not None else base.sigma, K if K is not None else base.K)
    if kind in ("combo", "center"):
        need_mu()
        base = ApproxCombination.from_estimate(mu, theta0, ratio) if mu is not None else None
        K2 = K if K is not None else base.K
        if sigma is None and mu is not None and K is not None:
            sig = schedule.choose_sigma(mu, K2, theta0, ratio)
        else:
            sig = sigma if sigma is not None else base.sigma
        return ApproxCombination(sig, K2)
    if kind == "interval":
        if cfg.get("K_high") is None:
            raise ConfigError("--restart interval needs --K-high")
        inner = FunctionValueAdaptive() if cfg["inner"] == "adaptive" else ConditionalAtZ()
        return IntervalAdaptive(cfg.get("K_low") or 0, cfg["K_high"], inner,
                                0.5 if sigma is None else sigma)
    raise ConfigError(f"unknown restart {kind!r}")


def _ensure_reference(prob, cfg):
    if cfg.get("tol") is not None and prob.reference is None:
        x, F = compute_reference(prob)
        prob = prob.with_reference(x, F)
    return prob


def _config_header(cfg: dict) -> list[str]:
    return [f"# {k} = {cfg[k]}" for k in sorted(cfg) if cfg[k] is not None]


def _write_csv(path, header_lines, columns, rows) -> None:
    lines = list(header_lines) + [",".join(columns)]
    for r in rows:
        lines.append(",".join("" if (isinstance(x, float) and math.isnan(x)) else
                              (repr(float(x)) if isinstance(x, (float, np.floating)) else str(x))
                              for x in r))
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _one_run(cfg: dict):
    prob = _ensure_reference(build_problem(cfg), cfg)
    policy = build_policy(cfg, prob.n)
    stop = StopRule(cfg.get("max_epochs"), cfg.get("tol"))
    trace = run(prob, cfg["solver"], policy, cfg["budget"], stop, cfg["seed"], tau=cfg["tau"],
                engine=cfg["engine"], record_every=cfg.get("record_every") or 1)
    return prob, policy, trace


# -- subcommands ------------------------------------------------------------------


def cmd_solve(cfg: dict) -> int:
    prob, policy, trace = _one_run(cfg)
    trace.meta.update({k: cfg[k] for k in sorted(cfg) if cfg[k] is not None and k not in trace.meta})
    if cfg.get("out"):
        data_io.write_trace(trace, cfg["out"])
    tol = cfg.get("tol")
    hit = trace.iterations_to(tol) if tol is not None else None
    final_gap = trace.gap[-1]
    print(f"solver={cfg['solver']} restart={policy!r} iterations={trace.iters[-1]} "
          f"iterations_to_tol={'' if hit is None else hit} final_F={trace.F[-1]!r} "
          f"final_gap={'' if math.isnan(final_gap) else repr(final_gap)} restarts={len(trace.events)}")
    return EXIT_OK


def rates_rows(mus, mu_Fs, n: int, tau: int, lam=None, variant: str = "main"):
    """One row per ``(mu, mu_F)`` pair: ``mu, mu_F, K, sigma, rate_restart, rate_simple, rate_cd``."""
    theta0 = tau / n
    ratio = n / tau
    rows = []
    for mu in mus:
        choice = schedule.restart_parameters(mu, theta0, ratio, lam, variant)
        for muF in mu_Fs:
            rows.append((mu, muF, choice.K, choice.sigma,
                         schedule.restart_rate(mu, muF, theta0, ratio, lam, variant),
                         schedule.rate_bound(mu, muF, theta0, lam),
                         schedule.cd_rate(muF, tau, n)))
    return rows


def cmd_rates(cfg: dict) -> int:
    n, tau = cfg["n"], cfg["tau"] or 1
    if n is None or n < 1 or not (1 <= tau <= n):
        raise ConfigError("need n >= 1 and 1 <= tau <= n")
    mus = parse_grid(cfg["mu_grid"]) if cfg.get("mu_grid") else (
        [cfg["mu"]] if cfg.get("mu") is not None else None)
    mu_Fs = parse_grid(cfg["mu_F_grid"]) if cfg.get("mu_F_grid") else [cfg["mu_F"]]
    if mus is None:
        raise ConfigError("rates needs --mu-grid or --mu")
    if any(not (0 < m <= 1) for m in mus):
        raise ConfigError("every mu must lie in (0, 1]")
    if any(m <= 0 for m in mu_Fs):
        raise ConfigError("every mu_F must be positive")
    rows = rates_rows(mus, mu_Fs, n, tau, cfg.get("lambda_"), cfg["variant"])
    cols = ("mu", "mu_F", "K", "sigma", "rate_restart", "rate_simple", "rate_cd")
    _write_csv(cfg.get("out"), _config_header(cfg), cols, rows)
    return EXIT_OK


_AXIS_TYPES = {"mu": float, "sigma": float, "K": int, "tau": int, "alpha": float,
               "K_low": int, "K_high": int, "l2": float, "reg_weight": float,
               "lambda1": float, "budget": int}


def _sweep_task(args):
    cfg, seed = args
    cfg = dict(cfg, seed=seed)
    _, _, trace = _one_run(cfg)
    tol = cfg.get("tol")
    hit = trace.iterations_to(tol) if tol is not None else None
    return (math.nan if hit is None else float(hit), trace.gap[-1], trace.F[-1], len(trace.events))


def cmd_sweep(cfg: dict) -> int:
    axis = cfg.get("axis")
    if axis is None:
        raise ConfigError("sweep needs --axis")
    axis = {"k": "K", "k_low": "K_low", "k_high": "K_high"}.get(axis.replace("-", "_"), axis.replace("-", "_"))
    if axis not in _AXIS_TYPES:
        raise ConfigError(f"cannot sweep over {axis!r}; choose from {sorted(_AXIS_TYPES)}")
    values = [_AXIS_TYPES[axis](v) for v in parse_grid(cfg.get("values"))]
    seeds_s = str(cfg.get("seeds") or "1")
    seeds = [int(s) for s in seeds_s.split(",")] if "," in seeds_s else list(range(int(seeds_s)))
    if not seeds:
        raise ConfigError("need at least one seed")
    base = dict(cfg)
    if base.get("tol") is not None and base.get("reference") is None:
        prob = build_problem(base)
        x, F = compute_reference(prob)
        tmp = Path(cfg.get("out") or "sweep").with_suffix(".reference.txt")
        data_io.write_reference(tmp, x, F, {"source": "sweep"})
        base["reference"] = str(tmp)
    tasks = [(dict(base, **{axis: v}), s) for v in values for s in seeds]
    workers = max(1, int(cfg.get("workers") or 1))
    if workers == 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_task, tasks))
    multi = len(seeds) > 1
    cols = [axis, "iters_mean"] + (["iters_std"] if multi else []) + ["gap_mean"] + (
        ["gap_std"] if multi else []) + ["reached", "restarts_mean"]
    rows = []
    for j, v in enumerate(values):
        chunk = results[j * len(seeds):(j + 1) * len(seeds)]
        its = np.array([r[0] for r in chunk])
        gaps = np.array([r[1] for r in chunk])
        reached = int(np.sum(~np.isnan(its)))
        it_mean = float(np.mean(its)) if reached == len(its) else math.nan
        row = [v, it_mean]
        if multi:
            row.append(float(np.std(its, ddof=1)) if reached == len(its) else math.nan)
        row.append(float(np.mean(gaps)))
        if multi:
            row.append(float(np.std(gaps, ddof=1)))
        row += [reached, float(np.mean([r[3] for r in chunk]))]
        rows.append(row)
    _write_csv(cfg.get("out"), _config_header(cfg), cols, rows)
    return EXIT_OK


def cmd_make_reference(cfg: dict) -> int:
    prob = build_problem(dict(cfg, reference=None))
    tol = cfg.get("tol") or 1e-13
    x, F = compute_reference(prob, tol=tol, max_iter=cfg.get("max_iter") or 10**6)
    meta = {k: cfg[k] for k in sorted(cfg) if cfg[k] is not None}
    out = cfg.get("out") or (str(Path(cfg["data"]).with_suffix(".reference.txt")) if cfg.get("data")
                             else "reference.txt")
    data_io.write_reference(out, x, F, meta)
    print(f"F_star={F!r} n={x.size} written to {out}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "rates": cmd_rates, "sweep": cmd_sweep,
            "make-reference": cmd_make_reference}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args, parser)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        if isinstance(exc, data_io.DataFormatError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
