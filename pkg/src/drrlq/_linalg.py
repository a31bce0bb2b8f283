"""Small shared linear-algebra helpers: symmetric eigen conventions,
Schatten norms, and positive-semidefinite utilities."""

import math

import numpy as np

# orders are floats so that infinity is representable; 1, 2, inf only
SCHATTEN_ORDERS = (1.0, 2.0, math.inf)


def as_order(p) -> float:
    """Normalize a Schatten order given as 1, 2, inf, or a string."""
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return math.inf
        p = float(s)
    p = float(p)
    if p not in SCHATTEN_ORDERS:
        raise ValueError(f"Schatten order must be 1, 2, or inf, got {p!r}")
    return p


def dual_order(p) -> float:
    p = as_order(p)
    if p == 1.0:
        return math.inf
    if p == math.inf:
        return 1.0
    return 2.0


def sym(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.T)


def vector_lp_norm(x: np.ndarray, p) -> float:
    p = as_order(p)
    x = np.abs(np.asarray(x, dtype=float))
    if p == 1.0:
        return float(x.sum())
    if p == 2.0:
        return float(np.sqrt((x * x).sum()))
    return float(x.max()) if x.size else 0.0


def schatten_norm(X: np.ndarray, p) -> float:
    """lp norm of the eigenvalues of a symmetric matrix."""
    p = as_order(p)
    if p == 2.0:
        return float(np.linalg.norm(X, "fro"))
    return vector_lp_norm(np.linalg.eigvalsh(sym(X)), p)


def eigh_descending(X: np.ndarray):
    """Symmetric eigendecomposition, eigenvalues descending, each vector
    sign-fixed so its first nonzero component is positive."""
    vals, vecs = np.linalg.eigh(sym(X))
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.nonzero(np.abs(col) > 1e-14 * max(1.0, np.abs(col).max()))[0]
        if nz.size and col[nz[0]] < 0.0:
            vecs[:, j] = -col
    return vals, vecs


def leading_unit_eigvec(X: np.ndarray) -> np.ndarray:
    vals, vecs = eigh_descending(X)
    return vecs[:, 0]


def psd_sqrt(X: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Symmetric square root, negative eigenvalues clipped to zero."""
    vals, vecs = np.linalg.eigh(sym(X))
    vals = np.clip(vals, tol, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def min_eigval(X: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(sym(X)).min())


def check_psd(X: np.ndarray, name: str, tol: float = 1e-9) -> None:
    lam = min_eigval(X)
    scale = max(1.0, float(np.abs(X).max()))
    if lam < -tol * scale:
        raise ValueError(f"{name} must be positive semidefinite "
                         f"(min eigenvalue {lam:.3e})")


def check_symmetric(X: np.ndarray, name: str, tol: float = 1e-8) -> None:
    gap = float(np.abs(X - X.T).max())
    if gap > tol * max(1.0, float(np.abs(X).max())):
        raise ValueError(f"{name} must be symmetric (asymmetry {gap:.3e})")
