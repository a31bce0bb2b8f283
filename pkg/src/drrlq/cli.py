"""Command-line front end: solve, benchmark, convergence, project,
export-sdp, and simulate, all driven by one YAML config file.

Every CSV body is deterministic for a fixed config and seed; wall-clock
measurements live in JSON sidecars or in the explicitly machine-dependent
timing files, never in the reproducible bodies.
"""

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np
import yaml

from . import __version__
from ._linalg import as_order
from .ambiguity import (AmbiguitySet, DisturbanceModel, RNG_ALGORITHM,
                        derive_seed, empirical_moments, load_trajectories_csv,
                        make_generator, sample_ar1, true_moments)
from .dual_solver import SolveReport, SolverConfig, solve, write_trace_csv
from .evaluate import (evaluate_closed_form, expected_cost, monte_carlo)
from .inner_qp import InnerSolveError, controller_opt_causal, controller_saa
from .lifting import (AffinePolicy, LtvSystem, affine_policy, assert_masked,
                      build_lifted)
from .projections import SchattenBall, project_lp_ball, project_schatten
from .sdp_export import export_sdp

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CONTROLLER_BY_P = {1.0: "dr_nuclear", 2.0: "dr_frobenius", math.inf: "dr_spectral"}

BENCHMARK_COLUMNS = ("controller", "p", "radius", "rho", "trial",
                     "expected_cost", "expected_regret", "exante_regret",
                     "worst_case_regret", "relgap", "iterations", "terminated")
CONVERGENCE_TRACE_COLUMNS = ("horizon", "trial", "iteration", "f", "g",
                             "relgap_best", "eta")
CONVERGENCE_TIMES_COLUMNS = ("horizon", "trial", "iterations",
                             "inner_iterations", "wall_ms")
SIMULATE_COLUMNS = ("trials", "expected_cost", "std_error", "cost_p20",
                    "cost_p80", "expected_regret", "exante_regret",
                    "worst_case_regret")


class ConfigError(Exception):
    """Configuration problem; the message carries the field path."""


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "inf" if v == math.inf else f"{v:.17g}"
    return str(v)


def _write_csv(path, columns, rows):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


class _Section:
    """Dict wrapper that reports missing/ill-typed fields by path."""

    def __init__(self, data, path=""):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping")
        self.data = data
        self.path = path

    def _at(self, key):
        return f"{self.path}.{key}" if self.path else key

    def section(self, key):
        return _Section(self.data.get(key), self._at(key))

    def has(self, key):
        return key in self.data and self.data[key] is not None

    def get(self, key, kind, default=..., choices=None):
        if not self.has(key):
            if default is ...:
                raise ConfigError(f"{self._at(key)}: required field missing")
            return default
        val = self.data[key]
        try:
            if kind == "int":
                if isinstance(val, bool) or int(val) != float(val):
                    raise ValueError
                val = int(val)
            elif kind == "float":
                val = float(val)
            elif kind == "str":
                if not isinstance(val, str):
                    raise ValueError
            elif kind == "bool":
                if not isinstance(val, bool):
                    raise ValueError
            elif kind == "order":
                val = as_order(val)
            elif kind == "matrix":
                val = np.asarray(val, dtype=float)
                if val.ndim != 2:
                    raise ValueError
            elif kind == "list":
                if not isinstance(val, list):
                    raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(f"{self._at(key)}: expected {kind}, got {val!r}")
        if choices is not None and val not in choices:
            raise ConfigError(f"{self._at(key)}: must be one of {choices}, "
                              f"got {val!r}")
        return val


def load_config(path) -> _Section:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})")
    cfg = _Section(raw)
    version = cfg.get("version", "int")
    if version != 1:
        raise ConfigError(f"version: unsupported config version {version}")
    return cfg


def _system_from(cfg: _Section) -> LtvSystem:
    sec = cfg.section("system")
    if not sec.data:
        raise ConfigError("system: section missing")
    A = sec.get("A", "matrix")
    B = sec.get("B", "matrix")
    horizon = sec.get("horizon", "int")
    stage_q = sec.data.get("stage_q", 1.0)
    stage_r = sec.data.get("stage_r", 1.0)
    try:
        return LtvSystem.time_invariant(A, B, horizon, stage_q, stage_r)
    except ValueError as exc:
        raise ConfigError(f"system: {exc}")


def _model_from(cfg: _Section, n_x, horizon, seed=None) -> DisturbanceModel:
    sec = cfg.section("disturbance")
    rho = sec.get("rho", "float", 0.0)
    base_seed = sec.get("seed", "int", 0) if seed is None else seed
    try:
        return DisturbanceModel(rho=rho, n_x=n_x, horizon=horizon,
                                seed=base_seed)
    except ValueError as exc:
        raise ConfigError(f"disturbance: {exc}")


def _nominal_moments(cfg: _Section, ls, model):
    sec = cfg.section("nominal")
    # "exact" rather than "true": YAML would parse a bare true as a boolean
    kind = sec.get("kind", "str", "sampled",
                   choices=("sampled", "exact", "trajectories", "moments"))
    if kind == "exact":
        return true_moments(model)
    if kind == "trajectories":
        path = sec.get("path", "str")
        W, n_x, horizon = load_trajectories_csv(path)
        if n_x != ls.n_x or horizon != ls.horizon:
            raise ConfigError(f"nominal.path: trajectories are n_x={n_x}, "
                              f"horizon={horizon}, plant needs {ls.n_x}, "
                              f"{ls.horizon}")
        return empirical_moments(W, center=sec.get("center", "bool", False))
    if kind == "moments":
        sigma = np.loadtxt(sec.get("sigma", "str"), delimiter=",", ndmin=2)
        mu = (np.loadtxt(sec.get("mu", "str"), delimiter=",").ravel()
              if sec.has("mu") else np.zeros(ls.n_states))
        return mu, sigma
    count = sec.get("count", "int", ls.n_states + 1)
    W = sample_ar1(model, count, rng=make_generator(
        derive_seed(model.seed, 0, 0)))
    return empirical_moments(W, center=sec.get("center", "bool", False))


def _ambiguity_from(cfg: _Section, mu, sigma) -> AmbiguitySet:
    sec = cfg.section("ambiguity")
    try:
        return AmbiguitySet(mu_hat=mu, sigma_hat=sigma,
                            r1=sec.get("r1", "float", 0.0),
                            r2=sec.get("r2", "float", 0.0),
                            p=sec.get("p", "order", 2.0))
    except ValueError as exc:
        raise ConfigError(f"ambiguity: {exc}")


def _solver_from(cfg: _Section, tol_override=None) -> SolverConfig:
    sec = cfg.section("solver")
    try:
        return SolverConfig(
            tol_relgap=(tol_override if tol_override is not None
                        else sec.get("tol_relgap", "float", 1e-3)),
            max_iters=sec.get("max_iters", "int", 5000),
            step_rule=sec.get("step_rule", "str", "adaptive",
                              choices=("adaptive", "constant", "diminishing")),
            eta0=sec.get("eta0", "float", None),
            inner_tol=sec.get("inner_tol", "float", 1e-10),
            init=sec.get("init", "str", "certifying",
                         choices=("certifying", "nominal")),
            record_history=sec.get("record_history", "bool", None),
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}")


def _meta(args, extra=None):
    meta = {
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "package_version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "command": args.command,
        "config": os.path.abspath(args.config) if args.config else None,
        "seed": args.seed,
        "threads": args.threads,
    }
    if extra:
        meta.update(extra)
    return meta


def _write_meta(out_dir, args, extra=None):
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump(_meta(args, extra), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("DRRLQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DRRLQ_THREADS: expected an integer, got {env!r}")
    return 1


# ---------------------------------------------------------------- solve

def cmd_solve(args, cfg: _Section) -> int:
    sys_ = _system_from(cfg)
    ls = build_lifted(sys_)
    model = _model_from(cfg, ls.n_x, ls.horizon, seed=args.seed)
    mu, sigma = _nominal_moments(cfg, ls, model)
    amb = _ambiguity_from(cfg, mu, sigma)
    scfg = _solver_from(cfg, args.tol)
    if scfg.record_history is None:
        scfg.record_history = True
    report = solve(ls, amb, scfg)
    pol = affine_policy(ls, report.gain, amb.mu_hat)

    out = args.out
    np.savetxt(os.path.join(out, "gain.csv"), report.gain, delimiter=",",
               fmt="%.17g")
    np.savetxt(os.path.join(out, "offset.csv"), pol.offset, delimiter=",",
               fmt="%.17g")
    np.savez(os.path.join(out, "policy.npz"), gain=report.gain,
             offset=pol.offset)
    write_trace_csv(report, os.path.join(out, "trace.csv"))
    summary = {
        "f_best": report.f_best,
        "g_best": report.g_best,
        "relgap": report.relgap,
        "iterations": report.iterations,
        "inner_iterations": report.inner_iterations,
        "termination": report.termination,
        "stop_rule": report.stop_rule,
        "cov_floor_min": report.cov_floor_min,
    }
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_meta(out, args, {"wall_time_s": report.wall_time_s})
    print(f"f_best={report.f_best:.9g} g_best={report.g_best:.9g} "
          f"relgap={report.relgap:.3g} iterations={report.iterations} "
          f"({report.termination})")
    return EXIT_OK


# ------------------------------------------------------------- benchmark

def _benchmark_task(payload):
    """One (rho, trial) cell: SAA, optimal-causal, and the radius sweep."""
    (A, B, horizon, stage_q, stage_r, rho, rho_idx, trial, master_seed,
     p_list, radii, solver_kw) = payload
    sys_ = LtvSystem.time_invariant(np.asarray(A), np.asarray(B), horizon,
                                    stage_q, stage_r)
    ls = build_lifted(sys_)
    model = DisturbanceModel(rho=rho, n_x=ls.n_x, horizon=horizon, seed=0)
    rng = make_generator(derive_seed(master_seed, rho_idx, trial))
    W = sample_ar1(model, ls.n_states + 1, rng=rng)
    mu_hat, sigma_hat = empirical_moments(W)

    mu_true, sigma_true = true_moments(model)
    opt = controller_opt_causal(ls, sigma_true, mu_true)
    opt_cost = expected_cost(opt, ls, mu_true, sigma_true)

    def row(controller, p, radius, pol, rep: SolveReport | None):
        res = evaluate_closed_form(pol, ls, mu_true, sigma_true,
                                   opt_cost=opt_cost)
        return {
            "controller": controller,
            "p": ("inf" if p == math.inf else int(p)) if p else None,
            "radius": radius,
            "rho": rho,
            "trial": trial,
            "expected_cost": res.expected_cost,
            "expected_regret": res.expected_regret,
            "exante_regret": res.exante_regret,
            "worst_case_regret": res.worst_case_regret,
            "relgap": rep.relgap if rep else None,
            "iterations": rep.iterations if rep else None,
            "terminated": rep.termination if rep else None,
        }

    rows = [row("opt_causal", None, None, opt, None),
            row("saa", None, None, controller_saa(ls, sigma_hat, mu_hat), None)]
    for p in p_list:
        for radius in radii:
            amb = AmbiguitySet(mu_hat=mu_hat, sigma_hat=sigma_hat, r1=0.0,
                               r2=radius, p=p)
            rep = solve(ls, amb, SolverConfig(record_history=False,
                                              **solver_kw))
            pol = affine_policy(ls, rep.gain, amb.mu_hat)
            rows.append(row(CONTROLLER_BY_P[p], p, radius, pol, rep))
    return rows


def benchmark_rows(cfg: _Section, master_seed, threads=1):
    sys_sec = cfg.section("system")
    A = sys_sec.get("A", "matrix").tolist()
    B = sys_sec.get("B", "matrix").tolist()
    horizon = sys_sec.get("horizon", "int")
    stage_q = sys_sec.data.get("stage_q", 1.0)
    stage_r = sys_sec.data.get("stage_r", 1.0)

    sec = cfg.section("benchmark")
    rhos = sec.get("rhos", "list", [0.0])
    trials = sec.get("trials", "int", 20)
    p_list = [as_order(p) for p in sec.get("p_list", "list", [1, 2, "inf"])]
    grid = sec.section("r_grid")
    lo = grid.get("lo", "float", 1e-4)
    hi = grid.get("hi", "float", 1e4)
    count = grid.get("count", "int", 9)
    if lo <= 0.0 or hi < lo:
        raise ConfigError("benchmark.r_grid: need 0 < lo <= hi")
    radii = np.geomspace(lo, hi, count).tolist()
    solver_kw = {}
    solver_sec = cfg.section("solver")
    if solver_sec.has("tol_relgap"):
        solver_kw["tol_relgap"] = solver_sec.get("tol_relgap", "float")
    if solver_sec.has("max_iters"):
        solver_kw["max_iters"] = solver_sec.get("max_iters", "int")

    payloads = [
        (A, B, horizon, stage_q, stage_r, float(rho), rho_idx, trial,
         master_seed, p_list, radii, solver_kw)
        for rho_idx, rho in enumerate(rhos)
        for trial in range(trials)
    ]
    rows = []
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as ex:
            for chunk in ex.map(_benchmark_task, payloads):
                rows.extend(chunk)
    else:
        for payload in payloads:
            rows.extend(_benchmark_task(payload))
    return rows


def cmd_benchmark(args, cfg: _Section) -> int:
    sec = cfg.section("benchmark")
    master_seed = args.seed if args.seed is not None else sec.get(
        "master_seed", "int", 0)
    threads = _resolve_threads(args)
    t0 = time.perf_counter()
    rows = benchmark_rows(cfg, master_seed, threads)
    _write_csv(os.path.join(args.out, "benchmark.csv"), BENCHMARK_COLUMNS, rows)
    _write_meta(args.out, args, {
        "wall_time_s": time.perf_counter() - t0,
        "master_seed": master_seed,
        "rows": len(rows),
    })
    print(f"benchmark: {len(rows)} rows -> "
          f"{os.path.join(args.out, 'benchmark.csv')}")
    return EXIT_OK


# ----------------------------------------------------------- convergence

def cmd_convergence(args, cfg: _Section) -> int:
    sec = cfg.section("convergence")
    if sec.has("horizons"):
        horizons = [int(h) for h in sec.get("horizons", "list")]
    else:
        lo = sec.get("lo", "int", 10)
        hi = sec.get("hi", "int", 200)
        step = sec.get("step", "int", 10)
        horizons = list(range(lo, hi + 1, step))
    trials = sec.get("trials", "int", 1)
    budget_s = sec.get("budget_s", "float", 600.0)
    p = sec.get("p", "order", 1.0)
    fixed_r = sec.get("r2", "float", None)
    master_seed = args.seed if args.seed is not None else sec.get(
        "master_seed", "int", 0)

    sys_sec = cfg.section("system")
    A = sys_sec.get("A", "matrix")
    B = sys_sec.get("B", "matrix")
    stage_q = sys_sec.data.get("stage_q", 1.0)
    stage_r = sys_sec.data.get("stage_r", 1.0)
    rho = cfg.section("disturbance").get("rho", "float", 0.0)
    scfg_kw = dict(record_history=True)
    if args.tol is not None:
        scfg_kw["tol_relgap"] = args.tol
    elif cfg.section("solver").has("tol_relgap"):
        scfg_kw["tol_relgap"] = cfg.section("solver").get("tol_relgap", "float")

    trace_rows, time_rows = [], []
    t_start = time.perf_counter()
    budget_hit = False
    for h_idx, horizon in enumerate(horizons):
        if time.perf_counter() - t_start > budget_s:
            budget_hit = True
            break
        sys_ = LtvSystem.time_invariant(A, B, horizon, stage_q, stage_r)
        ls = build_lifted(sys_)
        model = DisturbanceModel(rho=rho, n_x=ls.n_x, horizon=horizon, seed=0)
        for trial in range(trials):
            rng = make_generator(derive_seed(master_seed, h_idx, trial))
            W = sample_ar1(model, ls.n_states + 1, rng=rng)
            mu_hat, sigma_hat = empirical_moments(W)
            amb = AmbiguitySet(mu_hat=mu_hat, sigma_hat=sigma_hat, r1=0.0,
                               r2=float(horizon) if fixed_r is None else fixed_r,
                               p=p)
            rep = solve(ls, amb, SolverConfig(**scfg_kw))
            h = rep.history
            for i in range(len(h["f"])):
                trace_rows.append({
                    "horizon": horizon, "trial": trial, "iteration": i,
                    "f": h["f"][i], "g": h["g"][i],
                    "relgap_best": h["relgap_best"][i], "eta": h["eta"][i],
                })
            time_rows.append({
                "horizon": horizon, "trial": trial,
                "iterations": rep.iterations,
                "inner_iterations": rep.inner_iterations,
                "wall_ms": rep.wall_time_s * 1e3,
            })
    _write_csv(os.path.join(args.out, "convergence_trace.csv"),
               CONVERGENCE_TRACE_COLUMNS, trace_rows)
    _write_csv(os.path.join(args.out, "convergence_times.csv"),
               CONVERGENCE_TIMES_COLUMNS, time_rows)
    _write_meta(args.out, args, {
        "wall_time_s": time.perf_counter() - t_start,
        "master_seed": master_seed,
        "budget_hit": budget_hit,
        "horizons_done": sorted({r["horizon"] for r in time_rows}),
    })
    print(f"convergence: {len(time_rows)} solves -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- project

def cmd_project(args, cfg: _Section) -> int:
    sec = cfg.section("project")
    path = sec.get("input", "str")
    radius = sec.get("radius", "float")
    p = sec.get("p", "order", 2.0)
    X = np.loadtxt(path, delimiter=",", ndmin=2)
    if 1 in X.shape:
        out = project_lp_ball(X.ravel(), radius, p)
    else:
        center = (np.loadtxt(sec.get("center", "str"), delimiter=",", ndmin=2)
                  if sec.has("center") else None)
        out = project_schatten(X, SchattenBall(radius=radius, p=p,
                                               center=center))
        out = np.atleast_2d(out)
    dest = os.path.join(args.out, "projected.csv")
    np.savetxt(dest, np.atleast_2d(out), delimiter=",", fmt="%.17g")
    _write_meta(args.out, args, {"input": os.path.abspath(path)})
    print(f"projected -> {dest}")
    return EXIT_OK


# ------------------------------------------------------------- export-sdp

def cmd_export_sdp(args, cfg: _Section) -> int:
    sys_ = _system_from(cfg)
    ls = build_lifted(sys_)
    model = _model_from(cfg, ls.n_x, ls.horizon, seed=args.seed)
    mu, sigma = _nominal_moments(cfg, ls, model)
    amb = _ambiguity_from(cfg, mu, sigma)
    dest = os.path.join(args.out, "model.dat-s")
    try:
        sdp = export_sdp(ls, amb, dest)
    except ValueError as exc:
        raise ConfigError(f"ambiguity: {exc}")
    with open(os.path.join(args.out, "model_meta.json"), "w") as fh:
        json.dump(sdp.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_meta(args.out, args, {})
    print(f"exported {sdp.n_vars} variables, {len(sdp.block_dims)} blocks "
          f"-> {dest}")
    return EXIT_OK


# --------------------------------------------------------------- simulate

def cmd_simulate(args, cfg: _Section) -> int:
    sys_ = _system_from(cfg)
    ls = build_lifted(sys_)
    sec = cfg.section("simulate")
    gain = np.loadtxt(sec.get("gain", "str"), delimiter=",", ndmin=2)
    if gain.shape != ls.mask.shape:
        raise ConfigError(f"simulate.gain: expected shape {ls.mask.shape}, "
                          f"got {gain.shape}")
    try:
        assert_masked(gain, ls.mask, "simulate.gain")
    except ValueError as exc:
        raise ConfigError(str(exc))
    offset = (np.loadtxt(sec.get("offset", "str"), delimiter=",").ravel()
              if sec.has("offset") else np.zeros(ls.n_inputs))
    pol = AffinePolicy(gain=gain, offset=offset)
    trials = sec.get("trials", "int", 10000)
    model = _model_from(cfg, ls.n_x, ls.horizon, seed=args.seed)
    t0 = time.perf_counter()
    res = monte_carlo(pol, sys_, model, trials)
    row = {
        "trials": res.trials,
        "expected_cost": res.expected_cost,
        "std_error": res.std_error,
        "cost_p20": res.cost_p20,
        "cost_p80": res.cost_p80,
        "expected_regret": res.expected_regret,
        "exante_regret": res.exante_regret,
        "worst_case_regret": res.worst_case_regret,
    }
    _write_csv(os.path.join(args.out, "simulate.csv"), SIMULATE_COLUMNS, [row])
    _write_meta(args.out, args, {"wall_time_s": time.perf_counter() - t0})
    print(f"simulate: mean cost {res.expected_cost:.6g} "
          f"(se {res.std_error:.2g}) over {trials} rollouts")
    return EXIT_OK


# ------------------------------------------------------------------ main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drrlq",
        description="distributionally robust regret-optimal LQ control")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", cmd_solve), ("benchmark", cmd_benchmark),
                     ("convergence", cmd_convergence), ("project", cmd_project),
                     ("export-sdp", cmd_export_sdp), ("simulate", cmd_simulate)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker pool size (env DRRLQ_THREADS as fallback)")
        p.add_argument("--tol", type=float, default=None,
                       help="override solver relative-gap tolerance")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return args.fn(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InnerSolveError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
