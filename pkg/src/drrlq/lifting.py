"""Horizon lifting of linear time-varying dynamics.

A finite-horizon system x_{t+1} = A_t x_t + B_t u_t + w_t is stacked into
trajectory space: the state path (x_0..x_T), input path (u_0..u_{T-1}) and
noise path (x_0, w_0..w_{T-1}) become single vectors tied together by

    x = input_map @ u + noise_map @ w,

and the quadratic cost is x'Qx + u'Ru on the stacked vectors.  Everything
downstream (inner solves, dual ascent, evaluation, SDP export) works on
this representation.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from ._linalg import check_psd, check_symmetric, sym


def _as_matrix_seq(seq, name):
    mats = tuple(np.asarray(M, dtype=float) for M in seq)
    if not mats:
        raise ValueError(f"{name} must contain at least one matrix "
                         "(a zero-length horizon has no inputs)")
    for M in mats:
        if M.ndim != 2:
            raise ValueError(f"{name} entries must be 2-d matrices")
    return mats


def _block_diag_repeat(stage, copies):
    stage = np.atleast_2d(np.asarray(stage, dtype=float))
    if stage.shape[0] != stage.shape[1]:
        raise ValueError("stage cost must be square")
    return sla.block_diag(*([stage] * copies))


@dataclass(frozen=True)
class LtvSystem:
    """Time-varying dynamics with trajectory-space cost weights.

    A_seq and B_seq hold one matrix per step t = 0..T-1.  Q weighs the
    stacked state path including x_0 (size n_x*(T+1)); R weighs the
    stacked input path (size n_u*T).
    """

    A_seq: tuple
    B_seq: tuple
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A_seq", _as_matrix_seq(self.A_seq, "A_seq"))
        object.__setattr__(self, "B_seq", _as_matrix_seq(self.B_seq, "B_seq"))
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float))
        if len(self.A_seq) != len(self.B_seq):
            raise ValueError("A_seq and B_seq must have equal length")
        n_x = self.A_seq[0].shape[0]
        n_u = self.B_seq[0].shape[1]
        for t, (A, B) in enumerate(zip(self.A_seq, self.B_seq)):
            if A.shape != (n_x, n_x):
                raise ValueError(f"A_seq[{t}] must be {n_x}x{n_x}, got {A.shape}")
            if B.shape != (n_x, n_u):
                raise ValueError(f"B_seq[{t}] must be {n_x}x{n_u}, got {B.shape}")
        T = len(self.A_seq)
        if self.Q.shape != (n_x * (T + 1),) * 2:
            raise ValueError(f"Q must be {n_x * (T + 1)} square, got {self.Q.shape}")
        if self.R.shape != (n_u * T,) * 2:
            raise ValueError(f"R must be {n_u * T} square, got {self.R.shape}")

    @property
    def horizon(self) -> int:
        return len(self.A_seq)

    @property
    def n_x(self) -> int:
        return self.A_seq[0].shape[0]

    @property
    def n_u(self) -> int:
        return self.B_seq[0].shape[1]

    @staticmethod
    def time_invariant(A, B, horizon, stage_q, stage_r) -> "LtvSystem":
        """Replicate constant dynamics and stage costs over a horizon.

        Scalar stage costs are promoted to multiples of the identity.
        """
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        n_x = A.shape[0]
        n_u = B.shape[1]
        if np.isscalar(stage_q) or np.ndim(stage_q) == 0:
            stage_q = float(stage_q) * np.eye(n_x)
        if np.isscalar(stage_r) or np.ndim(stage_r) == 0:
            stage_r = float(stage_r) * np.eye(n_u)
        return LtvSystem(
            A_seq=(A,) * horizon,
            B_seq=(B,) * horizon,
            Q=_block_diag_repeat(stage_q, horizon + 1),
            R=_block_diag_repeat(stage_r, horizon),
        )


def causal_mask(n_x: int, n_u: int, horizon: int) -> np.ndarray:
    """Boolean support pattern of causal noise feedback, scalar granularity.

    Input block t may read noise blocks 0..t, i.e. the initial state and
    the disturbances that have already entered the state by time t.
    """
    mask = np.zeros((n_u * horizon, n_x * (horizon + 1)), dtype=bool)
    for t in range(horizon):
        mask[t * n_u:(t + 1) * n_u, :(t + 1) * n_x] = True
    return mask


@dataclass(frozen=True)
class LiftedSystem:
    """Trajectory-space plant: affine maps, cost weights, and the causal
    feedback geometry derived from them."""

    input_map: np.ndarray        # states from inputs, n x m
    noise_map: np.ndarray        # states from noises, n x n, unit block lower-triangular
    Q: np.ndarray
    R: np.ndarray
    curvature: np.ndarray        # R + input_map' Q input_map, positive definite
    clairvoyant_gain: np.ndarray  # unconstrained-optimal noise feedback, m x n
    mask: np.ndarray             # causal support pattern, boolean m x n
    n_x: int
    n_u: int
    horizon: int

    @property
    def n_states(self) -> int:
        return self.noise_map.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.input_map.shape[1]

    @cached_property
    def curvature_cho(self):
        return sla.cho_factor(self.curvature)

    @cached_property
    def noise_map_inverse(self) -> np.ndarray:
        # unit block lower bidiagonal: identity diagonal, -A_{t-1} below
        n = self.n_states
        n_x = self.n_x
        inv = np.eye(n)
        for t in range(1, self.horizon + 1):
            # the one-step sub-block of noise_map is exactly A_{t-1}
            A_prev = self.noise_map[t * n_x:(t + 1) * n_x, (t - 1) * n_x:t * n_x]
            inv[t * n_x:(t + 1) * n_x, (t - 1) * n_x:t * n_x] = -A_prev
        return inv

    @cached_property
    def clairvoyant_quadratic(self) -> np.ndarray:
        """Quadratic form giving the clairvoyant-play cost of a noise path."""
        G, F = self.noise_map, self.input_map
        Kc = self.clairvoyant_gain
        GQF = G.T @ self.Q @ F
        return sym(G.T @ self.Q @ G + Kc.T @ self.curvature @ Kc
                   + GQF @ Kc + (GQF @ Kc).T)


def build_lifted(sys: LtvSystem) -> LiftedSystem:
    """Assemble the trajectory-space maps and the clairvoyant gain.

    The clairvoyant gain solves the positive-definite normal equations by
    Cholesky factorization; the curvature inverse is never formed.
    """
    T = sys.horizon
    n_x, n_u = sys.n_x, sys.n_u
    n = n_x * (T + 1)
    m = n_u * T

    check_symmetric(sys.Q, "Q")
    check_symmetric(sys.R, "R")
    check_psd(sys.Q, "Q")
    r_min = float(np.linalg.eigvalsh(sym(sys.R)).min())
    if r_min <= 0.0:
        raise ValueError(f"R must be positive definite "
                         f"(min eigenvalue {r_min:.3e})")

    G = np.zeros((n, n))
    F = np.zeros((n, m))
    G[:n_x, :n_x] = np.eye(n_x)
    for t in range(1, T + 1):
        A = sys.A_seq[t - 1]
        rows = slice(t * n_x, (t + 1) * n_x)
        prev = slice((t - 1) * n_x, t * n_x)
        G[rows, :t * n_x] = A @ G[prev, :t * n_x]
        G[rows, t * n_x:(t + 1) * n_x] = np.eye(n_x)
        if t >= 2:
            F[rows, :(t - 1) * n_u] = A @ F[prev, :(t - 1) * n_u]
        F[rows, (t - 1) * n_u:t * n_u] = sys.B_seq[t - 1]

    D = sym(sys.R + F.T @ sys.Q @ F)
    cho = sla.cho_factor(D)
    K_clair = -sla.cho_solve(cho, F.T @ sys.Q @ G)

    return LiftedSystem(
        input_map=F,
        noise_map=G,
        Q=sys.Q,
        R=sys.R,
        curvature=D,
        clairvoyant_gain=K_clair,
        mask=causal_mask(n_x, n_u, T),
        n_x=n_x,
        n_u=n_u,
        horizon=T,
    )


@dataclass(frozen=True)
class AffinePolicy:
    """Noise-feedback policy u = gain @ w + offset."""

    gain: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gain", np.asarray(self.gain, dtype=float))
        object.__setattr__(self, "offset",
                           np.asarray(self.offset, dtype=float).ravel())
        if self.gain.shape[0] != self.offset.shape[0]:
            raise ValueError("gain and offset row counts differ")

    def inputs_for(self, w: np.ndarray) -> np.ndarray:
        return self.gain @ np.asarray(w, dtype=float) + self.offset


def assert_masked(K: np.ndarray, mask: np.ndarray, name: str = "gain") -> None:
    """Raise if K has support outside the causal pattern, listing offenders."""
    bad = np.argwhere((K != 0.0) & ~mask)
    if bad.size:
        shown = ", ".join(f"({i},{j})" for i, j in bad[:8])
        more = "" if bad.shape[0] <= 8 else f" and {bad.shape[0] - 8} more"
        raise ValueError(f"{name} violates the causal support pattern at "
                         f"entries {shown}{more}")


def affine_policy(ls: LiftedSystem, K: np.ndarray,
                  mu_hat: np.ndarray | None = None) -> AffinePolicy:
    """Policy with the offset that centers the feedback at the nominal mean:
    offset = -(K - clairvoyant_gain) @ mu_hat."""
    K = np.asarray(K, dtype=float)
    assert_masked(K, ls.mask)
    if mu_hat is None:
        v = np.zeros(ls.n_inputs)
    else:
        v = -(K - ls.clairvoyant_gain) @ np.asarray(mu_hat, dtype=float)
    return AffinePolicy(gain=K, offset=v)


def regret_quadratic(ls: LiftedSystem, K: np.ndarray) -> np.ndarray:
    """Curvature-weighted square of the gap to the clairvoyant gain.

    The trace of this matrix against a second moment gives expected regret.
    """
    delta = np.asarray(K, dtype=float) - ls.clairvoyant_gain
    return sym(delta.T @ ls.curvature @ delta)


def to_state_feedback(pol: AffinePolicy, ls: LiftedSystem):
    """Re-express noise feedback as state feedback u = L x + c.

    The noise path is recovered from the state path via the closed-form
    block-bidiagonal inverse of the noise map, and the resulting implicit
    relation is solved; I + K G^{-1} F is unit lower-triangular, hence
    invertible.
    """
    K = pol.gain
    Ginv = ls.noise_map_inverse
    KGinv = K @ Ginv
    A_impl = np.eye(ls.n_inputs) + KGinv @ ls.input_map
    L = np.linalg.solve(A_impl, KGinv)
    c = np.linalg.solve(A_impl, pol.offset)
    return L, c


def rollout(sys: LtvSystem, pol: AffinePolicy, w: np.ndarray):
    """Simulate the recursion under the policy for one noise path.

    Returns (x, u, cost) with the cost computed from the realized
    trajectories, not from the lifted maps.
    """
    T = sys.horizon
    n_x, n_u = sys.n_x, sys.n_u
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != n_x * (T + 1):
        raise ValueError(f"noise path must have length {n_x * (T + 1)}")
    u = pol.inputs_for(w)
    x = np.empty(n_x * (T + 1))
    x[:n_x] = w[:n_x]
    for t in range(T):
        xt = x[t * n_x:(t + 1) * n_x]
        ut = u[t * n_u:(t + 1) * n_u]
        x[(t + 1) * n_x:(t + 2) * n_x] = (sys.A_seq[t] @ xt + sys.B_seq[t] @ ut
                                          + w[(t + 1) * n_x:(t + 2) * n_x])
    cost = float(x @ sys.Q @ x + u @ sys.R @ u)
    return x, u, cost
