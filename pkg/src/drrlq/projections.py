"""Euclidean projections onto lp balls, Schatten balls, and the product
set the dual ascent iterates live in.

Matrix projections ride on the eigenvalue decomposition: projecting the
spectrum onto the corresponding vector ball and reassembling is exact for
symmetric matrices, and maps a nonnegative spectrum to a nonnegative one,
so positive semidefiniteness survives.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import as_order, sym
from .ambiguity import AmbiguitySet


def project_lp_ball(x: np.ndarray, radius: float, p) -> np.ndarray:
    """Project a vector onto the lp ball of the given radius.

    p = 1 uses the sorted-threshold rule (O(d log d)); p = 2 rescales;
    p = inf clips.  A zero radius returns the ball center exactly.
    """
    p = as_order(p)
    x = np.asarray(x, dtype=float)
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    if radius == 0.0:
        return np.zeros_like(x)
    if p == math.inf:
        return np.clip(x, -radius, radius)
    if p == 2.0:
        nrm = float(np.linalg.norm(x))
        if nrm <= radius:
            return x.copy()
        return x * (radius / nrm)
    # p == 1: soft threshold at the level that lands on the simplex
    a = np.abs(x)
    if a.sum() <= radius:
        return x.copy()
    u = np.sort(a)[::-1]
    cs = np.cumsum(u)
    idx = np.arange(1, a.size + 1)
    # >= (not >) keeps index 1 in the set when the radius is below the ulp
    # of the cumulative sum; equality cases zero the coordinate either way
    rho = idx[u * idx >= cs - radius][-1]
    theta = (cs[rho - 1] - radius) / rho
    return np.sign(x) * np.maximum(a - theta, 0.0)


@dataclass(frozen=True)
class SchattenBall:
    """{X symmetric : ||X - center||_p <= radius}; center None means zero."""

    radius: float
    p: float
    center: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "p", as_order(self.p))
        if self.radius < 0.0:
            raise ValueError("radius must be nonnegative")
        if self.center is not None:
            object.__setattr__(self, "center",
                               np.asarray(self.center, dtype=float))


def _project_spectrum(Y: np.ndarray, radius: float, p: float):
    """Project a symmetric matrix onto the centered Schatten ball.

    Returns (projection, min projected eigenvalue, min input eigenvalue).
    A zero radius returns the center exactly; the Frobenius case only
    rescales, so eigenvalues (when wanted) are computed without vectors.
    """
    if radius == 0.0:
        return np.zeros_like(Y), 0.0, 0.0
    if p == 2.0:
        floor = float(np.linalg.eigvalsh(Y).min())
        nrm = float(np.linalg.norm(Y, "fro"))
        if nrm <= radius:
            return Y.copy(), floor, floor
        alpha = radius / nrm
        return Y * alpha, alpha * floor, floor
    vals, vecs = np.linalg.eigh(Y)
    proj = project_lp_ball(vals, radius, p)
    return (vecs * proj) @ vecs.T, float(proj.min()), float(vals.min())


def project_schatten(X: np.ndarray, ball: SchattenBall) -> np.ndarray:
    """Project a (nearly) symmetric matrix onto a Schatten ball."""
    X = np.asarray(X, dtype=float)
    gap = float(np.abs(X - X.T).max()) if X.size else 0.0
    if gap > 1e-8:
        warnings.warn(f"input symmetrized before projection (asymmetry {gap:.3e})",
                      stacklevel=2)
    Y = sym(X)
    if ball.center is not None:
        Y = Y - ball.center
    if ball.radius == 0.0:
        out = np.zeros_like(Y)
    elif ball.p == 2.0:
        # pure rescaling, no spectral work needed
        nrm = float(np.linalg.norm(Y, "fro"))
        out = Y if nrm <= ball.radius else Y * (ball.radius / nrm)
    else:
        out, _, _ = _project_spectrum(Y, ball.radius, ball.p)
    if ball.center is not None:
        out = out + ball.center
    return sym(out)


@dataclass(frozen=True)
class DualIterate:
    """Feasible point of the dual product set: a trace-bounded psd block
    paired with a second-moment block inside the Schatten ball."""

    mean_block: np.ndarray
    cov_block: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean_block",
                           np.asarray(self.mean_block, dtype=float))
        object.__setattr__(self, "cov_block",
                           np.asarray(self.cov_block, dtype=float))
        if self.mean_block.shape != self.cov_block.shape:
            raise ValueError("dual blocks must share one shape")

    def stacked_norm(self, other: "DualIterate") -> float:
        """Frobenius distance of the stacked pair."""
        return math.sqrt(
            np.linalg.norm(self.mean_block - other.mean_block, "fro") ** 2
            + np.linalg.norm(self.cov_block - other.cov_block, "fro") ** 2)


def _project_dual_pair(lam: DualIterate, step, amb: AmbiguitySet,
                       check_tol: float = 1e-8):
    """Shared core: project (lam + step) back onto the dual product set.

    Both summands are positive semidefinite whenever the caller respects
    the ascent recursion, which keeps the shifted covariance block psd;
    a clearly negative input spectrum means a caller bug and is a hard
    error, not something to silently repair.

    Returns (iterate, min eigenvalue of the projected covariance shift).
    """
    s_mean, s_cov = step
    mean_in = sym(lam.mean_block + s_mean)
    cov_in = sym(lam.cov_block + s_cov) - amb.sigma_hat

    scale = max(1.0, float(np.abs(cov_in).max()), float(np.abs(mean_in).max()))
    mean_out, _, mean_floor = _project_spectrum(mean_in, amb.r1, 1.0)
    cov_out, cov_min, cov_floor = _project_spectrum(cov_in, amb.r2, amb.p)

    for name, floor in (("mean", mean_floor), ("covariance", cov_floor)):
        if floor < -check_tol * scale:
            raise ValueError(
                f"dual {name} block lost positive semidefiniteness "
                f"(min eigenvalue {floor:.3e}); the ascent recursion only "
                "ever adds psd steps, so the caller passed a bad iterate")

    out = DualIterate(mean_block=mean_out,
                      cov_block=amb.sigma_hat + cov_out)
    return out, float(cov_min)


def project_dual_pair(lam: DualIterate, step, amb: AmbiguitySet) -> DualIterate:
    """Project an ascent step onto the dual product set.

    The mean block goes to the trace-ball around zero; the covariance
    block keeps its offset from sigma_hat inside the Schatten p-ball.
    """
    out, _ = _project_dual_pair(lam, step, amb)
    return out
