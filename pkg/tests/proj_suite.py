"""Randomized projection property suite, shared by the unit tests and the
acceptance gate.

All feasibility and distance checks use numpy spectral calls directly, not
the library's own norm helpers, so the suite is an independent witness.
"""

import numpy as np

from drrlq import SchattenBall, project_schatten

ORDERS = (1.0, 2.0, np.inf)

# property name -> (worst value must stay below, tolerance)
THRESHOLDS = {
    "feasibility": 1e-9,
    "idempotence": 1e-10,
    "nonexpansive": 1e-10,
    "optimality": 1e-9,
    "psd": 1e-10,
    "unitary": 1e-9,
}


def snorm(X, p):
    eigs = np.linalg.eigvalsh(0.5 * (X + X.T))
    if p == 1.0:
        return float(np.abs(eigs).sum())
    if p == 2.0:
        return float(np.linalg.norm(X, "fro"))
    return float(np.abs(eigs).max())


def random_symmetric(rng, d, scale=2.0):
    M = rng.standard_normal((d, d)) * scale
    return 0.5 * (M + M.T)


def random_feasible_shift(rng, d, radius, p):
    S = random_symmetric(rng, d)
    return S * (radius * rng.uniform(0.0, 1.0) / max(snorm(S, p), 1e-300))


def run_suite(cases=200, seed=20240818, optimality_points=100):
    """Returns {property: worst violation} over `cases` randomized instances,
    cycling the Schatten order; negative/zero means the property held with
    margin."""
    rng = np.random.default_rng(seed)
    worst = {name: -np.inf for name in THRESHOLDS}

    def fro(M):
        return float(np.linalg.norm(M, "fro"))

    for i in range(cases):
        p = ORDERS[i % 3]
        d = int(rng.integers(2, 7))
        radius = float(rng.uniform(0.2, 3.0))
        center = random_symmetric(rng, d) if i % 2 else np.zeros((d, d))
        ball = SchattenBall(radius=radius, p=p, center=center)
        X = random_symmetric(rng, d, scale=float(rng.uniform(0.5, 4.0)))
        PX = project_schatten(X, ball)

        worst["feasibility"] = max(worst["feasibility"],
                                   snorm(PX - center, p) - radius)
        worst["idempotence"] = max(worst["idempotence"],
                                   fro(project_schatten(PX, ball) - PX))

        Y = random_symmetric(rng, d, scale=float(rng.uniform(0.5, 4.0)))
        PY = project_schatten(Y, ball)
        worst["nonexpansive"] = max(worst["nonexpansive"],
                                    fro(PX - PY) - fro(X - Y))

        dist = fro(PX - X)
        for _ in range(optimality_points):
            Z = center + random_feasible_shift(rng, d, radius, p)
            worst["optimality"] = max(worst["optimality"], dist - fro(Z - X))

        # PSD preservation and unitary invariance concern the origin-centered ball
        ball0 = SchattenBall(radius=radius, p=p)
        M = rng.standard_normal((d, d))
        Xpsd = M @ M.T
        worst["psd"] = max(worst["psd"],
                           -np.linalg.eigvalsh(project_schatten(Xpsd, ball0)).min())

        U, _ = np.linalg.qr(rng.standard_normal((d, d)))
        lhs = project_schatten(U @ X @ U.T, ball0)
        rhs = U @ project_schatten(X, ball0) @ U.T
        worst["unitary"] = max(worst["unitary"], fro(lhs - rhs))
    return worst
