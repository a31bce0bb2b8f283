"""Projected subgradient ascent on the dual of the worst-case regret problem.

The primal objective for a causal gain K is

    f(K) = tr(sigma_hat C) + r1 ||C||_spec + r2 ||C||_dual,   C = regret quadratic,

and the dual evaluates g(L) = min over causal K of tr((L1 + L2) C(K)) for a
feasible pair L.  Each ascent iteration solves the inner problem at the
current pair, takes a step along its regret quadratic, and projects back;
the best primal/dual values seen bracket the optimum, and the loop stops
once their relative gap clears the tolerance.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._linalg import leading_unit_eigvec, min_eigval
from .ambiguity import AmbiguitySet, worst_case_covariance
from .inner_qp import InnerProblem, solve_inner
from .lifting import LiftedSystem, regret_quadratic
from .projections import DualIterate, _project_dual_pair

TRACE_COLUMNS = ("iteration", "f", "g", "relgap_best", "eta", "millis")


@dataclass
class SolverConfig:
    tol_relgap: float = 1e-3
    max_iters: int = 5000
    step_rule: str = "adaptive"      # adaptive | constant | diminishing
    eta0: float | None = None        # None: 1 / ||C(K0)||_F for non-adaptive rules
    inner_tol: float = 1e-10
    init: str = "certifying"         # certifying | nominal
    record_history: bool | None = None  # None: record for horizons <= 100

    def __post_init__(self):
        if self.step_rule not in ("adaptive", "constant", "diminishing"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.init not in ("certifying", "nominal"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.tol_relgap <= 0.0:
            raise ValueError("tol_relgap must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class SolveReport:
    gain: np.ndarray
    dual: DualIterate
    f_best: float
    g_best: float
    relgap: float
    iterations: int
    termination: str                 # "tolerance" | "max_iters"
    stop_rule: str                   # "relative" | "absolute"
    cov_floor_min: float             # min over iterations of lam_min(L2 - sigma_hat)
    inner_iterations: int
    wall_time_s: float
    history: dict | None = field(default=None, repr=False)


def _f_terms(C: np.ndarray, amb: AmbiguitySet):
    """Three-term primal objective evaluated from the regret quadratic.

    The only spectral quantity ever needed is the top eigenvalue, shared
    by the mean term and the p=1 covariance term.
    """
    base = float(np.sum(amb.sigma_hat * C))
    lam_max = None
    if amb.r1 > 0.0 or (amb.r2 > 0.0 and amb.p == 1.0):
        lam_max = float(np.linalg.eigvalsh(C).max())
    total = base
    if amb.r1 > 0.0:
        total += amb.r1 * lam_max
    if amb.r2 > 0.0:
        if amb.p == 1.0:
            total += amb.r2 * lam_max
        elif amb.p == 2.0:
            total += amb.r2 * float(np.linalg.norm(C, "fro"))
        else:
            total += amb.r2 * float(np.trace(C))
    return total


def primal_value(K: np.ndarray, amb: AmbiguitySet, ls: LiftedSystem) -> float:
    """Worst-case expected regret of the gain over the ambiguity set."""
    return _f_terms(regret_quadratic(ls, K), amb)


def dual_value(lam: DualIterate, ls: LiftedSystem,
               inner_tol: float = 1e-10) -> float:
    """Lower bound from a feasible dual pair: the inner minimum it induces."""
    sol = solve_inner(InnerProblem(weight=lam.mean_block + lam.cov_block, ls=ls),
                      tol=inner_tol)
    return sol.value


def adaptive_step(lam_prev: DualIterate | None, lam: DualIterate | None,
                  grad_prev: np.ndarray | None, grad: np.ndarray | None) -> float:
    """Curvature-probing step: sqrt(2) * iterate movement over gradient
    movement (stacked-pair Frobenius norms), clamped to at most one.

    The first iteration and identical consecutive gradients give 1.
    """
    if lam_prev is None or lam is None or grad_prev is None or grad is None:
        return 1.0
    dgrad = math.sqrt(2.0) * float(np.linalg.norm(grad - grad_prev, "fro"))
    if dgrad == 0.0:
        return 1.0
    dlam = lam.stacked_norm(lam_prev)
    return min(1.0, math.sqrt(2.0) * dlam / dgrad)


def certifying_dual(amb: AmbiguitySet, C: np.ndarray) -> DualIterate:
    """Dual pair attaining f at the gain behind C: the rank-one mean
    certificate and the adversarial second moment."""
    if amb.r1 > 0.0:
        xi = leading_unit_eigvec(C)
        mean_block = amb.r1 * np.outer(xi, xi)
    else:
        mean_block = np.zeros_like(amb.sigma_hat)
    return DualIterate(mean_block=mean_block,
                       cov_block=worst_case_covariance(amb, C))


def _gap(f_best: float, g_best: float, tol: float):
    """Returns (relgap, converged, rule).  Positive dual values use the
    relative gap; a vanishing lower bound falls back to the absolute one."""
    gap = f_best - g_best
    if g_best > 0.0:
        rel = gap / g_best
        return rel, rel <= tol, "relative"
    converged = gap <= tol * max(1.0, abs(f_best))
    return (0.0 if converged else math.inf), converged, "absolute"


def solve(ls: LiftedSystem, amb: AmbiguitySet,
          cfg: SolverConfig | None = None) -> SolveReport:
    """Run the ascent loop until the primal-dual gap certifies the gain.

    On termination by tolerance, the returned gain's worst-case regret is
    within (1 + tol) of the causal optimum; the dual block of the report
    is the best lower-bound certificate seen.
    """
    cfg = cfg or SolverConfig()
    if amb.dim != ls.n_states:
        raise ValueError("ambiguity set dimension does not match the plant")
    t_start = time.perf_counter()

    record = cfg.record_history
    if record is None:
        record = ls.horizon <= 100
    hist = {k: [] for k in ("f", "g", "relgap_best", "eta", "millis",
                            "cov_floor")} if record else None

    inner_total = 0
    warm = None
    if cfg.init == "certifying":
        pre = solve_inner(InnerProblem(weight=amb.sigma_hat, ls=ls),
                          tol=cfg.inner_tol)
        inner_total += pre.iterations
        C_pre = regret_quadratic(ls, pre.K)
        lam = certifying_dual(amb, C_pre)
        warm = pre.K
        f_best = _f_terms(C_pre, amb)
        K_best = pre.K
        cov_floor = min_eigval(lam.cov_block - amb.sigma_hat)
    else:
        zero = np.zeros_like(amb.sigma_hat)
        lam = DualIterate(mean_block=zero, cov_block=amb.sigma_hat.copy())
        f_best = math.inf
        K_best = None
        cov_floor = 0.0

    g_best = -math.inf
    lam_best = lam
    cov_floor_min = cov_floor
    lam_prev = None
    C_prev = None
    relgap, converged, rule = math.inf, False, "relative"
    iterations = 0

    for i in range(cfg.max_iters):
        t_iter = time.perf_counter()
        sol = solve_inner(InnerProblem(weight=lam.mean_block + lam.cov_block,
                                       ls=ls),
                          tol=cfg.inner_tol, warm=warm)
        inner_total += sol.iterations
        iterations = i + 1
        C = regret_quadratic(ls, sol.K)
        f_i = _f_terms(C, amb)
        # zero radii collapse the dual set to the nominal point, where the
        # inner value and the primal objective are the same expression; use
        # one float so the reported gap is exactly zero
        g_i = f_i if amb.r1 == 0.0 and amb.r2 == 0.0 else sol.value
        if f_i < f_best:
            f_best, K_best = f_i, sol.K
        if g_i > g_best:
            g_best, lam_best = g_i, lam
        cov_floor_min = min(cov_floor_min, cov_floor)
        relgap, converged, rule = _gap(f_best, g_best, cfg.tol_relgap)

        eta = math.nan
        if not converged and i + 1 < cfg.max_iters:
            if cfg.step_rule == "adaptive":
                eta = adaptive_step(lam_prev, lam, C_prev, C)
            else:
                eta0 = cfg.eta0
                if eta0 is None:
                    scale = float(np.linalg.norm(C, "fro"))
                    eta0 = 1.0 / scale if scale > 0.0 else 1.0
                eta = eta0 if cfg.step_rule == "constant" else eta0 / math.sqrt(i + 1)

        if hist is not None:
            hist["f"].append(f_i)
            hist["g"].append(g_i)
            hist["relgap_best"].append(relgap)
            hist["eta"].append(eta)
            hist["millis"].append((time.perf_counter() - t_iter) * 1e3)
            hist["cov_floor"].append(cov_floor)
        if converged or i + 1 >= cfg.max_iters:
            break

        lam_prev, C_prev = lam, C
        lam, cov_floor = _project_dual_pair(lam, (eta * C, eta * C), amb)
        warm = sol.K

    report = SolveReport(
        gain=K_best,
        dual=lam_best,
        f_best=f_best,
        g_best=g_best,
        relgap=relgap,
        iterations=iterations,
        termination="tolerance" if converged else "max_iters",
        stop_rule=rule,
        cov_floor_min=cov_floor_min,
        inner_iterations=inner_total,
        wall_time_s=time.perf_counter() - t_start,
        history={k: np.asarray(v) for k, v in hist.items()} if hist else None,
    )
    return report


def write_trace_csv(report: SolveReport, path) -> None:
    """Per-iteration trace; wall-clock column is machine-dependent."""
    if report.history is None:
        raise ValueError("solve was run without history recording")
    h = report.history
    with open(path, "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for i in range(len(h["f"])):
            fh.write(f"{i},{h['f'][i]:.17g},{h['g'][i]:.17g},"
                     f"{h['relgap_best'][i]:.17g},{h['eta'][i]:.17g},"
                     f"{h['millis'][i]:.3f}\n")
