"""Weighted causal gain synthesis: the inner minimization of the dual loop.

For a psd weight W this solves

    minimize_K  tr( W (K - K_clair)' D (K - K_clair) )   over causal K,

whose stationarity condition is linear in the free entries of K:
mask o (D K W) = mask o (D K_clair W).  Small cold problems assemble the
dense normal matrix; otherwise a preconditioned conjugate gradient runs
directly on the masked matrix space, warm-started across outer iterations.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from ._linalg import check_symmetric
from .lifting import LiftedSystem, AffinePolicy, affine_policy

# free-entry count up to which a cold solve factorizes the normal matrix
DIRECT_LIMIT = 4000


class InnerSolveError(RuntimeError):
    """Iterative inner solve ran out of iterations; carries the residual."""

    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class InnerProblem:
    weight: np.ndarray
    ls: LiftedSystem

    def __post_init__(self):
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=float))
        n = self.ls.n_states
        if self.weight.shape != (n, n):
            raise ValueError(f"weight must be {n}x{n}, got {self.weight.shape}")
        check_symmetric(self.weight, "weight")


class InnerSolution(NamedTuple):
    K: np.ndarray
    value: float
    iterations: int
    residual: float
    method: str


def _objective(ls: LiftedSystem, W: np.ndarray, K: np.ndarray) -> float:
    delta = K - ls.clairvoyant_gain
    return float(np.sum(delta * (ls.curvature @ delta @ W)))


def _solve_direct(ls: LiftedSystem, W: np.ndarray, tol: float) -> InnerSolution:
    rows, cols = np.nonzero(ls.mask)
    H = ls.curvature[np.ix_(rows, rows)] * W[np.ix_(cols, cols)]
    rhs_mat = ls.curvature @ ls.clairvoyant_gain @ W
    rhs = rhs_mat[rows, cols]
    try:
        sol = sla.cho_solve(sla.cho_factor(H), rhs)
    except np.linalg.LinAlgError:
        # singular weight: any stationary point will do
        sol, *_ = np.linalg.lstsq(H, rhs, rcond=None)
    K = np.zeros_like(ls.clairvoyant_gain)
    K[rows, cols] = sol
    value = _objective(ls, W, K)
    if value < -tol * max(1.0, abs(value)):
        raise ValueError("weight matrix must be positive semidefinite "
                         f"(objective went negative: {value:.3e})")
    residual = float(np.linalg.norm(
        np.where(ls.mask, ls.curvature @ (K - ls.clairvoyant_gain) @ W, 0.0)))
    return InnerSolution(K=K, value=max(value, 0.0), iterations=1,
                         residual=residual, method="direct")


def _finish_cg(ls: LiftedSystem, W: np.ndarray, K: np.ndarray, tol: float,
               iterations: int, residual: float) -> InnerSolution:
    value = _objective(ls, W, K)
    if value < -tol * max(1.0, abs(value)):
        raise ValueError("weight matrix must be positive semidefinite "
                         f"(objective went negative: {value:.3e})")
    return InnerSolution(K=K, value=max(value, 0.0), iterations=iterations,
                         residual=residual, method="cg")


def _solve_cg(ls: LiftedSystem, W: np.ndarray, tol: float,
              warm: np.ndarray | None, max_iters: int | None) -> InnerSolution:
    mask = ls.mask
    D = ls.curvature
    b = np.where(mask, D @ ls.clairvoyant_gain @ W, 0.0)
    x = np.where(mask, warm, 0.0) if warm is not None else np.where(
        mask, ls.clairvoyant_gain, 0.0)

    # absolute floor keeps the target meaningful when the rhs nearly cancels
    data_scale = (np.linalg.norm(D, "fro")
                  * np.linalg.norm(ls.clairvoyant_gain, "fro")
                  * np.linalg.norm(W, "fro"))
    target = tol * max(float(np.linalg.norm(b)), 1e-14 * data_scale)

    precond = np.outer(np.diag(D), np.diag(W))[mask]
    precond = np.where(precond > 0.0, precond, 1.0)

    free = int(mask.sum())
    cap = max_iters if max_iters is not None else free + 200

    def apply(V):
        return np.where(mask, D @ V @ W, 0.0)

    r = b - apply(x)
    res = float(np.linalg.norm(r))
    if res <= target:
        return _finish_cg(ls, W, x, tol, 0, res)
    z = r.copy()
    z[mask] = r[mask] / precond
    p = z.copy()
    rz = float(np.sum(r * z))
    for it in range(1, cap + 1):
        Ap = apply(p)
        pAp = float(np.sum(p * Ap))
        if pAp <= 0.0:
            if pAp < -1e-12 * float(np.sum(p * p)):
                raise ValueError("weight matrix must be positive semidefinite "
                                 "(found a direction of negative curvature)")
            break  # numerically null direction with tiny residual left
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        res = float(np.linalg.norm(r))
        if res <= target:
            return _finish_cg(ls, W, x, tol, it, res)
        z = r.copy()
        z[mask] = r[mask] / precond
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res <= 1e3 * target:  # stalled a hair above the target; accept
        return _finish_cg(ls, W, x, tol, cap, res)
    raise InnerSolveError(
        f"inner solve did not reach residual {target:.3e} within {cap} "
        f"iterations (achieved {res:.3e})", residual=res)


def solve_inner(prob: InnerProblem, tol: float = 1e-10,
                warm: np.ndarray | None = None, method: str = "auto",
                max_iters: int | None = None) -> InnerSolution:
    """Minimize the weighted regret quadratic over causal gains.

    Returns the gain, the attained value, and solve diagnostics.  The
    residual measures masked stationarity relative to the rhs scale.
    """
    ls = prob.ls
    W = prob.weight
    if method == "auto":
        free = int(ls.mask.sum())
        method = "direct" if warm is None and free <= DIRECT_LIMIT else "cg"
    if method == "direct":
        return _solve_direct(ls, W, tol)
    if method == "cg":
        return _solve_cg(ls, W, tol, warm, max_iters)
    raise ValueError(f"unknown method {method!r}")


def controller_saa(ls: LiftedSystem, sigma_hat: np.ndarray,
                   mu_hat: np.ndarray | None = None) -> AffinePolicy:
    """Sample-average policy: best causal gain for the plug-in moments."""
    sol = solve_inner(InnerProblem(weight=sigma_hat, ls=ls))
    return affine_policy(ls, sol.K, mu_hat)


def controller_opt_causal(ls: LiftedSystem, sigma: np.ndarray,
                          mu: np.ndarray | None = None) -> AffinePolicy:
    """Best causal policy under exactly known moments."""
    sol = solve_inner(InnerProblem(weight=sigma, ls=ls))
    return affine_policy(ls, sol.K, mu)
