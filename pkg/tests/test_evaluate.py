"""Closed-form and Monte Carlo policy evaluation."""

import numpy as np
import pytest

import oracles
from conftest import double_integrator, random_system
from drrlq import (AffinePolicy, DisturbanceModel, affine_policy, build_lifted,
                   controller_opt_causal, controller_saa, empirical_moments,
                   evaluate_closed_form, monte_carlo, regret_quadratic,
                   sample_ar1, true_moments, worst_case_regret_ball)
from drrlq.evaluate import (clairvoyant_expected_cost, exante_regret,
                            expected_cost, expected_regret)


def random_policy(ls, rng, scale=0.5):
    K = ls.clairvoyant_gain * ls.mask + scale * rng.standard_normal(
        ls.mask.shape) * ls.mask
    return AffinePolicy(gain=K, offset=scale * rng.standard_normal(ls.n_inputs))


class TestExpectedCost:
    def test_deterministic_zero_noise(self, di10, rng):
        _, ls = di10
        v = rng.standard_normal(ls.n_inputs)
        pol = AffinePolicy(gain=np.zeros(ls.mask.shape), offset=v)
        mu = np.zeros(ls.n_states)
        sigma = np.zeros((ls.n_states, ls.n_states))
        assert expected_cost(pol, ls, mu, sigma) == pytest.approx(
            v @ ls.curvature @ v, rel=1e-12)

    def test_clairvoyant_gain_has_zero_regret_term(self, di10):
        _, ls = di10
        # test-only policy: the clairvoyant gain is not causal
        pol = AffinePolicy(gain=ls.clairvoyant_gain,
                           offset=np.zeros(ls.n_inputs))
        mu = np.zeros(ls.n_states)
        sigma = np.eye(ls.n_states)
        assert expected_regret(pol, ls, mu, sigma) == pytest.approx(0.0,
                                                                    abs=1e-12)
        assert expected_cost(pol, ls, mu, sigma) == pytest.approx(
            clairvoyant_expected_cost(ls, mu, sigma), rel=1e-12)

    def test_additivity_identity(self, rng):
        # cost minus regret is the same clairvoyant constant for any policy
        sys_ = random_system(rng, n_x=2, n_u=2, horizon=3)
        ls = build_lifted(sys_)
        mu = rng.standard_normal(ls.n_states) * 0.5
        M = rng.standard_normal((ls.n_states, ls.n_states))
        sigma = M @ M.T / ls.n_states
        base = clairvoyant_expected_cost(ls, mu, sigma)
        for _ in range(10):
            pol = random_policy(ls, rng)
            gap = (expected_cost(pol, ls, mu, sigma)
                   - expected_regret(pol, ls, mu, sigma))
            assert gap == pytest.approx(base, rel=1e-8)

    def test_clairvoyant_cost_matches_batch_rollouts(self, rng):
        sys_ = random_system(rng, n_x=2, n_u=1, horizon=3)
        ls = build_lifted(sys_)
        model = DisturbanceModel(rho=0.4, n_x=2, horizon=3, seed=613)
        W = sample_ar1(model, 200_000)
        costs = oracles.batch_costs(sys_.A_seq, sys_.B_seq, sys_.Q, sys_.R,
                                    ls.clairvoyant_gain,
                                    np.zeros(ls.n_inputs), W, 2, 1)
        mu, sigma = true_moments(model)
        closed = clairvoyant_expected_cost(ls, mu, sigma)
        se = costs.std(ddof=1) / np.sqrt(costs.size)
        assert abs(costs.mean() - closed) <= 3.0 * se


class TestExpectedRegret:
    def test_plugin_moments_give_trace_formula(self, di10, rng):
        _, ls = di10
        model = DisturbanceModel(rho=0.3, n_x=2, horizon=10, seed=5)
        mu_hat, sigma_hat = empirical_moments(sample_ar1(model, 23))
        pol = controller_saa(ls, sigma_hat, mu_hat)
        C = regret_quadratic(ls, pol.gain)
        assert expected_regret(pol, ls, mu_hat, sigma_hat) == pytest.approx(
            float(np.sum(sigma_hat * C)), rel=1e-10, abs=1e-12)

    def test_zero_covariance_centered_mean(self, di10, rng):
        _, ls = di10
        mu = rng.standard_normal(ls.n_states)
        K = ls.mask * rng.standard_normal(ls.mask.shape)
        pol = affine_policy(ls, K, mu)
        sigma = np.zeros((ls.n_states, ls.n_states))
        assert expected_regret(pol, ls, mu, sigma) == pytest.approx(0.0,
                                                                    abs=1e-12)

    def test_nonnegative(self, rng):
        sys_ = random_system(rng, n_x=2, n_u=1, horizon=3)
        ls = build_lifted(sys_)
        mu = rng.standard_normal(ls.n_states)
        M = rng.standard_normal((ls.n_states, ls.n_states))
        sigma = M @ M.T
        for _ in range(10):
            assert expected_regret(random_policy(ls, rng), ls, mu,
                                   sigma) >= 0.0


class TestWorstCaseRegret:
    def test_quadratic_scaling(self, di10, rng):
        _, ls = di10
        K = ls.mask * rng.standard_normal(ls.mask.shape)
        delta = K - ls.clairvoyant_gain
        pol1 = AffinePolicy(gain=ls.clairvoyant_gain + delta,
                            offset=np.zeros(ls.n_inputs))
        pol3 = AffinePolicy(gain=ls.clairvoyant_gain + 3.0 * delta,
                            offset=np.zeros(ls.n_inputs))
        assert worst_case_regret_ball(pol3, ls) == pytest.approx(
            9.0 * worst_case_regret_ball(pol1, ls), rel=1e-10)

    def test_sphere_grid_oracle(self, rng):
        # scalar plant, horizon 2: the noise ball lives in dimension 3
        sys_ = random_system(rng, n_x=1, n_u=1, horizon=2)
        ls = build_lifted(sys_)
        pol = random_policy(ls, rng, scale=1.0)
        C = regret_quadratic(ls, pol.gain)
        dirs = rng.standard_normal((10_000, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        grid_max = np.einsum("ij,jk,ik->i", dirs, C, dirs).max()
        certified = worst_case_regret_ball(pol, ls)
        assert grid_max <= certified + 1e-12
        assert grid_max >= 0.98 * certified


class TestExanteRegret:
    def test_opt_causal_dominance(self, di10, rng):
        _, ls = di10
        model = DisturbanceModel(rho=0.5, n_x=2, horizon=10, seed=8)
        mu, sigma = true_moments(model)
        opt_cost = expected_cost(controller_opt_causal(ls, sigma, mu), ls, mu,
                                 sigma)
        for _ in range(10):
            pol = random_policy(ls, rng)
            assert exante_regret(pol, ls, mu, sigma,
                                 opt_cost=opt_cost) >= -1e-8

    def test_evaluate_closed_form_bundle(self, di10):
        _, ls = di10
        model = DisturbanceModel(rho=0.0, n_x=2, horizon=10, seed=8)
        mu, sigma = true_moments(model)
        pol = controller_opt_causal(ls, sigma, mu)
        res = evaluate_closed_form(pol, ls, mu, sigma)
        assert res.exante_regret == pytest.approx(0.0, abs=1e-10)
        assert res.expected_cost == pytest.approx(
            expected_cost(pol, ls, mu, sigma))
        assert res.worst_case_regret > 0.0


class TestMonteCarlo:
    def test_zero_noise_collapses_percentiles(self, rng):
        sys_ = double_integrator(4)
        ls = build_lifted(sys_)
        v = rng.standard_normal(ls.n_inputs) * 0.2
        pol = AffinePolicy(gain=np.zeros(ls.mask.shape), offset=v)
        model = DisturbanceModel(rho=0.0, n_x=2, horizon=4, seed=1,
                                 noise_scale=0.0)
        res = monte_carlo(pol, sys_, model, trials=50)
        deterministic = float(v @ ls.curvature @ v)
        assert res.expected_cost == pytest.approx(deterministic, rel=1e-10)
        assert res.cost_p20 == pytest.approx(deterministic, rel=1e-10)
        assert res.cost_p80 == pytest.approx(deterministic, rel=1e-10)
        assert res.std_error == pytest.approx(0.0, abs=1e-12)

    def test_matches_closed_form_within_three_se(self):
        sys_ = double_integrator(6)
        ls = build_lifted(sys_)
        model = DisturbanceModel(rho=0.3, n_x=2, horizon=6, seed=77)
        mu_hat, sigma_hat = empirical_moments(sample_ar1(model, 15))
        pol = controller_saa(ls, sigma_hat, mu_hat)
        res = monte_carlo(pol, sys_, model, trials=20_000)
        mu, sigma = true_moments(model)
        closed = expected_cost(pol, ls, mu, sigma)
        assert abs(res.expected_cost - closed) <= 3.0 * res.std_error
        assert res.cost_p20 <= res.expected_cost
        assert res.expected_cost <= res.cost_p80 + 3.0 * res.std_error

    def test_seeded_and_deterministic(self):
        sys_ = double_integrator(3)
        ls = build_lifted(sys_)
        pol = AffinePolicy(gain=np.zeros(ls.mask.shape),
                           offset=np.zeros(ls.n_inputs))
        model = DisturbanceModel(rho=0.2, n_x=2, horizon=3, seed=55)
        a = monte_carlo(pol, sys_, model, trials=500)
        b = monte_carlo(pol, sys_, model, trials=500)
        assert a.expected_cost == b.expected_cost
        c = monte_carlo(pol, sys_, model, trials=500, seed=56)
        assert c.expected_cost != a.expected_cost

    def test_batching_is_statistically_consistent(self):
        # the sampler interleaves draws per time step, so different batch
        # sizes see different streams; they must still agree statistically
        sys_ = double_integrator(3)
        ls = build_lifted(sys_)
        pol = AffinePolicy(gain=0.1 * ls.mask.astype(float),
                           offset=np.zeros(ls.n_inputs))
        model = DisturbanceModel(rho=0.1, n_x=2, horizon=3, seed=9)
        a = monte_carlo(pol, sys_, model, trials=4000, batch=4000)
        b = monte_carlo(pol, sys_, model, trials=4000, batch=170)
        se = np.hypot(a.std_error, b.std_error)
        assert abs(a.expected_cost - b.expected_cost) <= 3.0 * se

    def test_too_few_trials_rejected(self):
        sys_ = double_integrator(3)
        ls = build_lifted(sys_)
        pol = AffinePolicy(gain=np.zeros(ls.mask.shape),
                           offset=np.zeros(ls.n_inputs))
        with pytest.raises(ValueError, match="trials"):
            monte_carlo(pol, sys_, DisturbanceModel(rho=0.0, n_x=2, horizon=3),
                        trials=1)
