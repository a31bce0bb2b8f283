"""Shared instance generators for the test suite."""

import numpy as np
import pytest

from drrlq import AmbiguitySet, LtvSystem, build_lifted


def random_system(rng: np.random.Generator, n_x=2, n_u=1, horizon=3,
                  time_varying=False) -> LtvSystem:
    """Random plant with mildly contractive dynamics and PD weights."""
    steps = horizon if time_varying else 1
    A_seq, B_seq = [], []
    for _ in range(steps):
        A = rng.standard_normal((n_x, n_x))
        A *= 0.9 / max(1.0, np.abs(np.linalg.eigvals(A)).max())
        A_seq.append(A)
        B_seq.append(rng.standard_normal((n_x, n_u)))
    if not time_varying:
        A_seq *= horizon
        B_seq *= horizon

    def rand_pd(d):
        M = rng.standard_normal((d, d))
        return M @ M.T + d * np.eye(d)

    dim_x, dim_u = n_x * (horizon + 1), n_u * horizon
    return LtvSystem(A_seq=tuple(A_seq), B_seq=tuple(B_seq),
                     Q=rand_pd(dim_x) / dim_x, R=rand_pd(dim_u) / dim_u)


def random_ambiguity(rng: np.random.Generator, dim, r1=None, r2=None,
                     p=2.0) -> AmbiguitySet:
    M = rng.standard_normal((dim, dim))
    sigma = M @ M.T / dim + 0.5 * np.eye(dim)
    return AmbiguitySet(
        mu_hat=rng.standard_normal(dim) * 0.3,
        sigma_hat=sigma,
        r1=float(rng.uniform(0.1, 2.0)) if r1 is None else r1,
        r2=float(rng.uniform(0.1, 2.0)) if r2 is None else r2,
        p=p,
    )


def double_integrator(horizon=10) -> LtvSystem:
    """The benchmark testbed plant: position/velocity chain, heavy input cost."""
    A = np.array([[1.0, 1.0], [0.0, 0.05]])
    B = np.array([[0.0], [1.0]])
    return LtvSystem.time_invariant(A, B, horizon, 1.0, 10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def di10():
    sys_ = double_integrator(10)
    return sys_, build_lifted(sys_)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance test in the run summary."""
    rows = []
    for word, key in (("PASS", "passed"), ("FAIL", "failed"),
                      ("FAIL", "error"), ("SKIP", "skipped")):
        for rep in terminalreporter.stats.get(key, ()):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                rows.append((nodeid.split("::")[-1], word))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, word in sorted(rows):
            terminalreporter.write_line(f"[{word}] {name}")
