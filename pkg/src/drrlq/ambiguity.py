"""Moment ambiguity sets, disturbance models, and worst-case moments.

The ambiguity set constrains the noise-path mean to a Euclidean ball of
squared radius r1 around mu_hat and the second-moment matrix to a Schatten
p-ball of radius r2 around Sigma_hat.  Given the regret quadratic of a
fixed policy, the adversary's optimal mean and covariance have closed
forms, built here.
"""

import math
import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._linalg import (as_order, check_psd, check_symmetric, dual_order,
                      leading_unit_eigvec, schatten_norm, sym)

# every stochastic output records this so runs can name their generator
RNG_ALGORITHM = "numpy.random.PCG64"


def make_generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master: int, *key: int) -> np.random.SeedSequence:
    """Stable per-task seed material from a master seed and an index path."""
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


@dataclass(frozen=True)
class AmbiguitySet:
    """Mean ball (squared radius r1) and Schatten-p second-moment ball."""

    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    r1: float
    r2: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "mu_hat",
                           np.asarray(self.mu_hat, dtype=float).ravel())
        object.__setattr__(self, "sigma_hat",
                           np.asarray(self.sigma_hat, dtype=float))
        object.__setattr__(self, "r1", float(self.r1))
        object.__setattr__(self, "r2", float(self.r2))
        object.__setattr__(self, "p", as_order(self.p))
        if self.r1 < 0.0 or self.r2 < 0.0:
            raise ValueError("radii must be nonnegative")
        if self.sigma_hat.shape != (self.mu_hat.size,) * 2:
            raise ValueError("sigma_hat shape does not match mu_hat length")
        check_symmetric(self.sigma_hat, "sigma_hat")
        check_psd(self.sigma_hat, "sigma_hat")

    @property
    def q(self) -> float:
        return dual_order(self.p)

    @property
    def dim(self) -> int:
        return self.mu_hat.size


@dataclass(frozen=True)
class DisturbanceModel:
    """AR(1) noise path: x_0 standard normal, w_t = rho*w_{t-1} + eps_t with
    eps_t ~ N(0, (1-rho^2) I) and w_{-1} taken to be x_0.

    noise_scale multiplies the whole path; zero gives a deterministic
    (noise-free) model, useful as a degenerate evaluation case.
    """

    rho: float
    n_x: int
    horizon: int
    seed: int = 0
    noise_scale: float = 1.0

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.noise_scale < 0.0:
            raise ValueError("noise_scale must be nonnegative")

    @property
    def dim(self) -> int:
        return self.n_x * (self.horizon + 1)


def sample_ar1(model: DisturbanceModel, count: int,
               rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw noise paths, one per row; stationary marginals are standard normal."""
    if rng is None:
        rng = make_generator(model.seed)
    n_x, T = model.n_x, model.horizon
    rho = model.rho
    out = np.empty((count, model.dim))
    out[:, :n_x] = rng.standard_normal((count, n_x))
    scale = math.sqrt(1.0 - rho * rho)
    for t in range(1, T + 1):
        eps = rng.standard_normal((count, n_x))
        out[:, t * n_x:(t + 1) * n_x] = (rho * out[:, (t - 1) * n_x:t * n_x]
                                         + scale * eps)
    if model.noise_scale != 1.0:
        out *= model.noise_scale
    return out


def true_moments(model: DisturbanceModel):
    """Exact stationary moments: zero mean, block-Toeplitz covariance with
    blocks rho^|s-t| I."""
    lags = model.rho ** np.arange(model.horizon + 1)
    cov = np.kron(sla.toeplitz(lags), np.eye(model.n_x))
    return np.zeros(model.dim), model.noise_scale ** 2 * cov


def empirical_moments(samples: np.ndarray, center: bool = False):
    """Plug-in moments from sampled noise paths (rows).

    Uncentered (the default) returns a zero mean estimate and the raw
    second-moment matrix; centered subtracts the sample mean first.
    """
    W = np.atleast_2d(np.asarray(samples, dtype=float))
    N = W.shape[0]
    if N == 0:
        raise ValueError("need at least one sample")
    if center:
        mu = W.mean(axis=0)
        Wc = W - mu
        sigma = (Wc.T @ Wc) / N
    else:
        mu = np.zeros(W.shape[1])
        sigma = (W.T @ W) / N
    return mu, sym(sigma)


def worst_case_mean(amb: AmbiguitySet, regret_quad: np.ndarray) -> np.ndarray:
    """Adversarial mean: step of length sqrt(r1) along the leading
    eigenvector of the regret quadratic (deterministic sign)."""
    if amb.r1 == 0.0:
        return amb.mu_hat.copy()
    xi = leading_unit_eigvec(regret_quad)
    return amb.mu_hat + math.sqrt(amb.r1) * xi


def worst_case_covariance(amb: AmbiguitySet, regret_quad: np.ndarray) -> np.ndarray:
    """Adversarial second moment on the boundary of the Schatten ball.

    The added term picks up exactly r2 * (dual norm of the regret
    quadratic) in the trace pairing.  For p = 1 the optimal perturbation
    is rank one; for p = inf it is a multiple of the identity (this also
    covers a vanishing regret quadratic); for p = 2 it is the normalized
    quadratic itself, undefined direction at zero, where the center is
    returned.
    """
    C = sym(np.asarray(regret_quad, dtype=float))
    if amb.r2 == 0.0:
        return amb.sigma_hat.copy()
    if amb.p == 1.0:
        xi = leading_unit_eigvec(C)
        return sym(amb.sigma_hat + amb.r2 * np.outer(xi, xi))
    if amb.p == math.inf:
        return amb.sigma_hat + amb.r2 * np.eye(amb.dim)
    nrm = np.linalg.norm(C, "fro")
    if nrm == 0.0:
        return amb.sigma_hat.copy()
    return sym(amb.sigma_hat + (amb.r2 / nrm) * C)


def worst_case_trace_gain(amb: AmbiguitySet, regret_quad: np.ndarray) -> float:
    """Objective increase the adversarial covariance buys: r2 * dual norm."""
    if amb.r2 == 0.0:
        return 0.0
    return amb.r2 * schatten_norm(regret_quad, amb.q)


_HEADER_RE = re.compile(r"n_x\s*=\s*(\d+)\s+horizon\s*=\s*(\d+)")


def save_trajectories_csv(path, samples: np.ndarray, n_x: int, horizon: int) -> None:
    """One noise path per row; the header records the block structure."""
    W = np.atleast_2d(np.asarray(samples, dtype=float))
    if W.shape[1] != n_x * (horizon + 1):
        raise ValueError("sample width does not match n_x*(horizon+1)")
    np.savetxt(path, W, delimiter=",", fmt="%.17g",
               header=f"n_x={n_x} horizon={horizon}", comments="# ")


def load_trajectories_csv(path):
    """Returns (samples, n_x, horizon); validates the declared width."""
    with open(path) as fh:
        first = fh.readline()
    m = _HEADER_RE.search(first)
    if not m:
        raise ValueError(f"{path}: missing '# n_x=.. horizon=..' header line")
    n_x, horizon = int(m.group(1)), int(m.group(2))
    W = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if W.shape[1] != n_x * (horizon + 1):
        raise ValueError(f"{path}: row width {W.shape[1]} does not match "
                         f"header n_x={n_x} horizon={horizon}")
    return W, n_x, horizon
