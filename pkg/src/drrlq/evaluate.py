"""Policy evaluation: closed-form moments-based formulas and seeded
Monte Carlo rollouts.

For an affine policy u = K w + v the realized cost splits into the regret
term (u - K_clair w)' D (u - K_clair w) plus the clairvoyant-play cost
w' N w, which makes both expectations exact given first and second
moments of the noise path.
"""

from dataclasses import dataclass

import numpy as np

from .ambiguity import DisturbanceModel, make_generator, sample_ar1, true_moments
from .inner_qp import controller_opt_causal
from .lifting import AffinePolicy, LtvSystem, LiftedSystem, build_lifted, regret_quadratic


@dataclass(frozen=True)
class EvalResult:
    expected_cost: float
    expected_regret: float
    worst_case_regret: float
    exante_regret: float | None = None
    cost_p20: float | None = None
    cost_p80: float | None = None
    std_error: float | None = None
    trials: int | None = None


def clairvoyant_expected_cost(ls: LiftedSystem, mu: np.ndarray,
                              sigma: np.ndarray) -> float:
    """Expected cost of clairvoyant play under the given noise moments."""
    mu = np.asarray(mu, dtype=float)
    second = np.asarray(sigma, dtype=float) + np.outer(mu, mu)
    return float(np.sum(second * ls.clairvoyant_quadratic))


def expected_regret(pol: AffinePolicy, ls: LiftedSystem, mu: np.ndarray,
                    sigma: np.ndarray) -> float:
    C = regret_quadratic(ls, pol.gain)
    drift = (pol.gain - ls.clairvoyant_gain) @ np.asarray(mu, dtype=float) \
        + pol.offset
    return float(np.sum(np.asarray(sigma, dtype=float) * C)
                 + drift @ ls.curvature @ drift)


def expected_cost(pol: AffinePolicy, ls: LiftedSystem, mu: np.ndarray,
                  sigma: np.ndarray) -> float:
    return expected_regret(pol, ls, mu, sigma) + clairvoyant_expected_cost(
        ls, mu, sigma)


def worst_case_regret_ball(pol: AffinePolicy, ls: LiftedSystem) -> float:
    """Peak regret over a unit-noise ball: the top regret-quadratic eigenvalue."""
    return float(np.linalg.eigvalsh(regret_quadratic(ls, pol.gain)).max())


def exante_regret(pol: AffinePolicy, ls: LiftedSystem, mu: np.ndarray,
                  sigma: np.ndarray, opt_cost: float | None = None) -> float:
    """Expected-cost excess over the best causal policy for these moments."""
    if opt_cost is None:
        best = controller_opt_causal(ls, np.asarray(sigma, dtype=float),
                                     np.asarray(mu, dtype=float))
        opt_cost = expected_cost(best, ls, mu, sigma)
    return expected_cost(pol, ls, mu, sigma) - opt_cost


def evaluate_closed_form(pol: AffinePolicy, ls: LiftedSystem, mu: np.ndarray,
                         sigma: np.ndarray,
                         opt_cost: float | None = None) -> EvalResult:
    """All closed-form figures in one record; pass the optimal-causal cost
    to avoid re-solving it per policy."""
    cost = expected_cost(pol, ls, mu, sigma)
    regret = expected_regret(pol, ls, mu, sigma)
    if opt_cost is None:
        best = controller_opt_causal(ls, np.asarray(sigma, dtype=float),
                                     np.asarray(mu, dtype=float))
        opt_cost = expected_cost(best, ls, mu, sigma)
    return EvalResult(
        expected_cost=cost,
        expected_regret=regret,
        worst_case_regret=worst_case_regret_ball(pol, ls),
        exante_regret=cost - opt_cost,
    )


def _batched_rollout_costs(sys: LtvSystem, ls: LiftedSystem, pol: AffinePolicy,
                           W: np.ndarray):
    """Realized (cost, regret) per noise-path row, stepping the recursion."""
    n_x, n_u, T = sys.n_x, sys.n_u, sys.horizon
    U = W @ pol.gain.T + pol.offset
    X = np.empty((W.shape[0], n_x * (T + 1)))
    X[:, :n_x] = W[:, :n_x]
    for t in range(T):
        xt = X[:, t * n_x:(t + 1) * n_x]
        ut = U[:, t * n_u:(t + 1) * n_u]
        X[:, (t + 1) * n_x:(t + 2) * n_x] = (xt @ sys.A_seq[t].T
                                             + ut @ sys.B_seq[t].T
                                             + W[:, (t + 1) * n_x:(t + 2) * n_x])
    costs = (np.einsum("ij,jk,ik->i", X, sys.Q, X)
             + np.einsum("ij,jk,ik->i", U, sys.R, U))
    gap = U - W @ ls.clairvoyant_gain.T
    regrets = np.einsum("ij,jk,ik->i", gap, ls.curvature, gap)
    return costs, regrets


def monte_carlo(pol: AffinePolicy, sys: LtvSystem, model: DisturbanceModel,
                trials: int, seed=None, batch: int = 20000) -> EvalResult:
    """Seeded rollout study: mean cost with its standard error, 20th/80th
    cost percentiles, mean realized regret, and the closed-form ex-ante
    regret against the optimal causal policy for the model's true moments.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials for a standard error")
    ls = build_lifted(sys)
    rng = make_generator(model.seed if seed is None else seed)
    costs = np.empty(trials)
    regrets = np.empty(trials)
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        W = sample_ar1(model, k, rng=rng)
        costs[done:done + k], regrets[done:done + k] = _batched_rollout_costs(
            sys, ls, pol, W)
        done += k
    mu, sigma = true_moments(model)
    best = controller_opt_causal(ls, sigma, mu)
    opt_cost = expected_cost(best, ls, mu, sigma)
    p20, p80 = np.percentile(costs, [20.0, 80.0])
    return EvalResult(
        expected_cost=float(costs.mean()),
        expected_regret=float(regrets.mean()),
        worst_case_regret=worst_case_regret_ball(pol, ls),
        exante_regret=float(costs.mean()) - opt_cost,
        cost_p20=float(p20),
        cost_p80=float(p80),
        std_error=float(costs.std(ddof=1) / np.sqrt(trials)),
        trials=trials,
    )
