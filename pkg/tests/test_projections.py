"""Vector lp-ball, Schatten-ball, and dual-pair projections."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

import oracles
import proj_suite
from drrlq import (AmbiguitySet, DualIterate, SchattenBall, project_dual_pair,
                   project_lp_ball, project_schatten)


class TestVectorBall:
    def test_l1_threshold_example(self):
        np.testing.assert_allclose(
            project_lp_ball(np.array([3.0, 1.0]), 2.0, 1.0), [2.0, 0.0],
            atol=1e-12)

    def test_linf_clip_example(self):
        np.testing.assert_allclose(
            project_lp_ball(np.array([3.0, -1.0]), 2.0, math.inf), [2.0, -1.0])

    def test_l2_radial_scaling(self):
        np.testing.assert_allclose(
            project_lp_ball(np.array([3.0, 4.0]), 5.0, 2.0), [3.0, 4.0])
        np.testing.assert_allclose(
            project_lp_ball(np.array([6.0, 8.0]), 5.0, 2.0), [3.0, 4.0])

    def test_zero_radius(self, rng):
        x = rng.standard_normal(5)
        for p in (1.0, 2.0, math.inf):
            np.testing.assert_array_equal(project_lp_ball(x, 0.0, p),
                                          np.zeros(5))

    @given(hnp.arrays(np.float64, st.integers(1, 8),
                      elements=st.floats(-50, 50)),
           st.floats(0.0, 20.0))
    @settings(max_examples=200, deadline=None)
    def test_l1_matches_bisection_oracle(self, x, radius):
        mine = project_lp_ball(x, radius, 1.0)
        ref = oracles.project_l1_bisect(x, radius)
        np.testing.assert_allclose(mine, ref, atol=1e-7)
        assert np.abs(mine).sum() <= radius + 1e-9

    @given(hnp.arrays(np.float64, st.integers(1, 8),
                      elements=st.floats(0.0, 50.0)),
           st.floats(0.1, 20.0), st.sampled_from([1.0, 2.0, math.inf]))
    @settings(max_examples=150, deadline=None)
    def test_nonnegative_input_nonnegative_output(self, x, radius, p):
        assert project_lp_ball(x, radius, p).min() >= 0.0

    @given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, math.inf]))
    @settings(max_examples=100, deadline=None)
    def test_projection_optimality(self, seed, p):
        g = np.random.default_rng(seed)
        d = int(g.integers(1, 8))
        x = g.standard_normal(d) * 3.0
        radius = float(g.uniform(0.1, 3.0))
        y = project_lp_ball(x, radius, p)
        dist = np.linalg.norm(y - x)
        for _ in range(30):
            z = g.standard_normal(d)
            nrm = {1.0: np.abs(z).sum(), 2.0: np.linalg.norm(z),
                   math.inf: np.abs(z).max()}[p]
            z *= radius * g.uniform(0.0, 1.0) / max(nrm, 1e-300)
            assert dist <= np.linalg.norm(z - x) + 1e-9


class TestSchattenBall:
    def test_nuclear_diag_example(self):
        ball = SchattenBall(radius=2.0, p=1.0)
        np.testing.assert_allclose(
            project_schatten(np.diag([3.0, 1.0]), ball), np.diag([2.0, 0.0]),
            atol=1e-12)

    def test_spectral_diag_example(self):
        ball = SchattenBall(radius=2.0, p=math.inf)
        np.testing.assert_allclose(
            project_schatten(np.diag([3.0, -1.0]), ball),
            np.diag([2.0, -1.0]), atol=1e-12)

    def test_interior_point_unchanged(self, rng):
        X = proj_suite.random_symmetric(rng, 4, scale=0.1)
        ball = SchattenBall(radius=100.0, p=2.0)
        np.testing.assert_allclose(project_schatten(X, ball), X, atol=1e-14)

    def test_zero_radius_returns_center(self, rng):
        center = proj_suite.random_symmetric(rng, 3)
        ball = SchattenBall(radius=0.0, p=1.0, center=center)
        X = proj_suite.random_symmetric(rng, 3)
        np.testing.assert_array_equal(project_schatten(X, ball), center)

    def test_asymmetric_input_warns(self):
        ball = SchattenBall(radius=1.0, p=2.0)
        X = np.array([[1.0, 1.0], [0.0, 1.0]])
        with pytest.warns(UserWarning, match="symmetr"):
            project_schatten(X, ball)

    def test_property_suite(self):
        worst = proj_suite.run_suite(cases=200)
        for name, tol in proj_suite.THRESHOLDS.items():
            assert worst[name] <= tol, f"{name}: worst violation {worst[name]}"


class TestDualPair:
    @staticmethod
    def amb(r1=1.0, r2=2.0, p=math.inf, dim=2):
        return AmbiguitySet(mu_hat=np.zeros(dim), sigma_hat=np.eye(dim),
                            r1=r1, r2=r2, p=p)

    def test_zero_step_feasible_fixed_point(self, rng):
        amb = self.amb()
        lam = DualIterate(mean_block=0.4 * np.eye(2),
                          cov_block=np.eye(2) + 0.5 * np.eye(2))
        zero = np.zeros((2, 2))
        out = project_dual_pair(lam, (zero, zero), amb)
        np.testing.assert_allclose(out.mean_block, lam.mean_block, atol=1e-12)
        np.testing.assert_allclose(out.cov_block, lam.cov_block, atol=1e-12)

    def test_zero_mean_radius_pins_first_block(self, rng):
        amb = self.amb(r1=0.0)
        lam = DualIterate(mean_block=np.zeros((2, 2)), cov_block=np.eye(2))
        step = np.abs(proj_suite.random_symmetric(rng, 2))
        step = step @ step.T
        out = project_dual_pair(lam, (step, step), amb)
        np.testing.assert_array_equal(out.mean_block, np.zeros((2, 2)))

    def test_spectral_clip_example(self):
        amb = self.amb(r1=0.0, r2=2.0, p=math.inf)
        lam = DualIterate(mean_block=np.zeros((2, 2)), cov_block=np.eye(2))
        out = project_dual_pair(lam, (np.zeros((2, 2)), np.diag([3.0, 0.0])),
                                amb)
        np.testing.assert_allclose(out.cov_block, np.diag([3.0, 1.0]),
                                   atol=1e-12)

    def test_mean_block_ball_and_psd(self, rng):
        amb = self.amb(r1=1.5, r2=1.0, p=1.0, dim=3)
        lam = DualIterate(mean_block=np.zeros((3, 3)), cov_block=np.eye(3))
        M = rng.standard_normal((3, 3))
        big = 10.0 * (M @ M.T)
        out = project_dual_pair(lam, (big, big), amb)
        eigs = np.linalg.eigvalsh(out.mean_block)
        assert eigs.min() >= -1e-10
        assert np.abs(eigs).sum() <= amb.r1 + 1e-9
        shift_eigs = np.linalg.eigvalsh(out.cov_block - amb.sigma_hat)
        assert np.abs(shift_eigs).sum() <= amb.r2 + 1e-9
        assert shift_eigs.min() >= -1e-10  # PSD step on a feasible base

    def test_precondition_violation_raises(self):
        amb = self.amb(r1=1.0, r2=1.0)
        lam = DualIterate(mean_block=np.zeros((2, 2)),
                          cov_block=np.zeros((2, 2)))  # far below sigma_hat
        with pytest.raises(ValueError, match="semidefinite"):
            project_dual_pair(lam, (np.zeros((2, 2)), np.zeros((2, 2))), amb)

    def test_stacked_norm(self):
        a = DualIterate(mean_block=np.eye(2), cov_block=np.zeros((2, 2)))
        b = DualIterate(mean_block=np.zeros((2, 2)), cov_block=np.eye(2))
        assert a.stacked_norm(b) == pytest.approx(2.0)
