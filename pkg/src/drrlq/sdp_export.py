"""Export of the worst-case regret synthesis problem as a semidefinite
program in sparse SDPA format (.dat-s).

The trace term rides on an epigraph matrix X dominated by the weighted
regret quadratic through a Schur-complement LMI; the spectral-norm terms
use scaled-identity epigraphs of the same shape; the nuclear-norm term
(p = inf) uses a psd matrix epigraph Y.  This module only writes the
model; solving is left to external conic solvers.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._linalg import psd_sqrt, sym
from .ambiguity import AmbiguitySet
from .lifting import LiftedSystem, assert_masked, regret_quadratic
from . import dual_solver


@dataclass
class SdpModel:
    """Sparse symmetric-block model: minimize objective @ x subject to
    sum_k x_k F_k - F_0 psd per block.  Entries are (matno, block, i, j,
    value) with 1-based indices, matno 0 the constant matrix, i <= j."""

    objective: np.ndarray
    block_dims: list
    entries: list
    var_names: list
    metadata: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return self.objective.size


def _upper(i, j, val):
    return (i, j, val) if i <= j else (j, i, val)


def build_sdp(ls: LiftedSystem, amb: AmbiguitySet) -> SdpModel:
    """Assemble the model; only p in {1, inf} admit this exact LMI form."""
    if amb.p == 2.0:
        raise ValueError(
            "p=2 (Frobenius) has no linear-matrix reformulation in this "
            "scheme; export supports p=1 and p=inf only")
    n, m = ls.n_states, ls.n_inputs
    rows, cols = np.nonzero(ls.mask)
    n_k = rows.size
    sqrt_sigma = psd_sqrt(amb.sigma_hat)
    cho = sla.cho_factor(ls.curvature)
    D_inv = sym(sla.cho_solve(cho, np.eye(m)))
    eigs_D = np.linalg.eigvalsh(ls.curvature)
    K_clair = ls.clairvoyant_gain

    var_names = [f"K[{a},{b}]" for a, b in zip(rows, cols)]
    tri = [(i, j) for i in range(n) for j in range(i, n)]
    var_names += [f"X[{i},{j}]" for i, j in tri]
    x_offset = n_k
    gamma_mean = gamma_cov = y_offset = None
    if amb.r1 > 0.0:
        gamma_mean = len(var_names)
        var_names.append("gamma_mean")
    if amb.r2 > 0.0:
        if amb.p == 1.0:
            gamma_cov = len(var_names)
            var_names.append("gamma_cov")
        else:
            y_offset = len(var_names)
            var_names += [f"Y[{i},{j}]" for i, j in tri]
    n_vars = len(var_names)

    c = np.zeros(n_vars)
    for t, (i, j) in enumerate(tri):
        if i == j:
            c[x_offset + t] = 1.0
    if gamma_mean is not None:
        c[gamma_mean] = amb.r1
    if gamma_cov is not None:
        c[gamma_cov] = amb.r2
    if y_offset is not None:
        for t, (i, j) in enumerate(tri):
            if i == j:
                c[y_offset + t] = amb.r2

    entries = []
    block_dims = []

    def add(matno, block, i, j, val):
        if val != 0.0:
            entries.append((matno, block, *_upper(i + 1, j + 1, val)))

    def gap_block(block, corner):
        """Shared geometry: [[corner, delta'], [delta, D^{-1}]] >= 0.

        corner is 'X', 'gamma_mean', 'gamma_cov', 'Y', or 'sqrt' (the X
        corner paired with the sigma-sqrt-scaled gap).
        """
        scaled = corner == "sqrt"
        # constant matrix F0 = -(constant part of the LMI)
        Kc_top = sqrt_sigma @ K_clair.T if scaled else K_clair.T
        for i in range(n):
            for a in range(m):
                add(0, block, i, n + a, Kc_top[i, a])
        for a in range(m):
            for b in range(a, m):
                add(0, block, n + a, n + b, -D_inv[a, b])
        # gain variables enter the off-diagonal corner
        for e in range(n_k):
            a_e, b_e = rows[e], cols[e]
            if scaled:
                col = sqrt_sigma[:, b_e]
                for i in range(n):
                    add(1 + e, block, i, n + a_e, col[i])
            else:
                add(1 + e, block, b_e, n + a_e, 1.0)

    block = 1
    block_dims.append(n + m)
    gap_block(block, "sqrt")
    for t, (i, j) in enumerate(tri):
        add(1 + x_offset + t, block, i, j, 1.0)

    if gamma_mean is not None:
        block += 1
        block_dims.append(n + m)
        gap_block(block, "gamma_mean")
        for i in range(n):
            add(1 + gamma_mean, block, i, i, 1.0)

    if gamma_cov is not None:
        block += 1
        block_dims.append(n + m)
        gap_block(block, "gamma_cov")
        for i in range(n):
            add(1 + gamma_cov, block, i, i, 1.0)

    if y_offset is not None:
        block += 1
        block_dims.append(n + m)
        gap_block(block, "Y")
        for t, (i, j) in enumerate(tri):
            add(1 + y_offset + t, block, i, j, 1.0)
        block += 1  # Y itself stays psd
        block_dims.append(n)
        for t, (i, j) in enumerate(tri):
            add(1 + y_offset + t, block, i, j, 1.0)

    meta = {
        "n": n, "m": m, "horizon": ls.horizon,
        "p": "inf" if amb.p == math.inf else int(amb.p),
        "r1": amb.r1, "r2": amb.r2,
        "gain_vars": int(n_k), "tri_vars": len(tri),
        "cond_curvature": float(eigs_D.max() / eigs_D.min()),
    }
    return SdpModel(objective=c, block_dims=block_dims, entries=entries,
                    var_names=var_names, metadata=meta)


def write_sdpa(model: SdpModel, path) -> None:
    with open(path, "w") as fh:
        fh.write("* worst-case quadratic-regret synthesis, sparse SDPA\n")
        fh.write("* variable order: causal gain entries (row-major over the "
                 "support mask),\n")
        fh.write("*   then upper-triangle trace epigraph X"
                 + (", then scalar epigraphs / upper-triangle Y"
                    if model.n_vars > model.metadata["gain_vars"]
                    + model.metadata["tri_vars"] else "") + "\n")
        fh.write("* blocks: gap LMIs of size n+m; a trailing size-n block "
                 "keeps Y psd when present\n")
        for k, v in sorted(model.metadata.items()):
            fh.write(f"* {k} = {v}\n")
        fh.write(f"{model.n_vars}\n")
        fh.write(f"{len(model.block_dims)}\n")
        fh.write(" ".join(str(d) for d in model.block_dims) + "\n")
        fh.write(" ".join(f"{v:.17g}" for v in model.objective) + "\n")
        for matno, block, i, j, val in model.entries:
            fh.write(f"{matno} {block} {i} {j} {val:.17g}\n")


def export_sdp(ls: LiftedSystem, amb: AmbiguitySet, path) -> SdpModel:
    """Write the synthesis SDP for external solution; returns the model."""
    model = build_sdp(ls, amb)
    write_sdpa(model, path)
    return model


def feasible_point(ls: LiftedSystem, amb: AmbiguitySet, model: SdpModel,
                   K: np.ndarray) -> np.ndarray:
    """Variable vector realizing the gain K with all epigraphs tight.

    Evaluating the model objective here reproduces the three-term
    worst-case value of K.
    """
    assert_masked(K, ls.mask, "gain")
    C = regret_quadratic(ls, K)
    n = ls.n_states
    rows, cols = np.nonzero(ls.mask)
    sqrt_sigma = psd_sqrt(amb.sigma_hat)
    X = sym(sqrt_sigma @ C @ sqrt_sigma)
    tri = [(i, j) for i in range(n) for j in range(i, n)]
    x = np.zeros(model.n_vars)
    x[:rows.size] = K[rows, cols]
    off = rows.size
    for t, (i, j) in enumerate(tri):
        x[off + t] = X[i, j]
    off += len(tri)
    lam_max = float(np.linalg.eigvalsh(C).max()) if (
        amb.r1 > 0.0 or amb.p == 1.0) else 0.0
    if amb.r1 > 0.0:
        x[off] = lam_max
        off += 1
    if amb.r2 > 0.0:
        if amb.p == 1.0:
            x[off] = lam_max
        else:
            for t, (i, j) in enumerate(tri):
                x[off + t] = C[i, j]
    return x


def certify_solution(ls: LiftedSystem, amb: AmbiguitySet, K_ext: np.ndarray,
                     reference: float | None = None) -> float:
    """Worst-case-regret gap of an externally obtained gain against a
    reference solve: f(K_ext) - f(K_best).  Negative means the external
    gain is the better one."""
    K_ext = np.asarray(K_ext, dtype=float)
    assert_masked(K_ext, ls.mask, "external gain")
    if reference is None:
        reference = dual_solver.solve(ls, amb).f_best
    return dual_solver.primal_value(K_ext, amb, ls) - float(reference)
