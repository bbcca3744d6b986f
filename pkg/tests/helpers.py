"""Shared builders and independent checks for the test suite."""
from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.sparse as sp

from amgeig.coarsening import Label
from amgeig.hierarchy import Hierarchy
from amgeig.sparse import SparseMatrix


def tridiag(n: int) -> SparseMatrix:
    return SparseMatrix.from_dense(2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))


def random_sparse(rng, nrows, ncols, density=0.3) -> SparseMatrix:
    m = sp.random(nrows, ncols, density=density, random_state=rng, format="csr")
    m.data = rng.standard_normal(m.nnz)
    return SparseMatrix.from_scipy(m)


def random_pair(rng, n: int, density: float = 0.25) -> tuple[SparseMatrix, SparseMatrix]:
    """Random SPD M-matrix ``A`` (weighted graph Laplacian plus a positive
    diagonal) and a random SPD ``M`` on the same pattern."""
    W = sp.random(n, n, density=density, random_state=rng, format="coo")
    W = sp.triu(W, k=1)
    # a path keeps the graph connected
    path = sp.diags(np.full(n - 1, 1.0), 1)
    W = (W + path).tocsr()
    W.data = rng.uniform(0.5, 2.0, W.nnz)
    W = W + W.T
    L = sp.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    A = L + sp.diags(rng.uniform(0.05, 0.5, n))
    pattern = (W != 0).astype(float)
    M = 0.05 * pattern.multiply(W) + sp.diags(np.asarray(W.sum(axis=1)).ravel() * 0.25 + 0.1)
    return SparseMatrix.from_scipy(A), SparseMatrix.from_scipy(M)


def rel_err(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.abs(b).max(initial=0.0), 1e-300)
    return float(np.abs(a - b).max(initial=0.0) / scale)


def coarsening_violations(h: Hierarchy) -> list[str]:
    """Every broken coarsening guarantee of ``h``, as readable messages."""
    problems = []
    for k, (setup, P) in enumerate(zip(h.setups, h.prolongations)):
        label = setup.split.label
        n = len(label)
        strong = [set(s.tolist()) for s in setup.graph.strong]
        if np.any(label == Label.U) or not np.all(np.isin(label, (Label.C, Label.F))):
            problems.append(f"level {k}: splitting is not a C/F partition")
        cpts = np.flatnonzero(label == Label.C)
        if P.shape != (n, len(cpts)):
            problems.append(f"level {k}: prolongation shape {P.shape}, expected {(n, len(cpts))}")
            continue
        for c, i in enumerate(cpts.tolist()):
            cols, vals = P.row(i)
            if not (len(cols) == 1 and cols[0] == c and vals[0] == 1.0):
                problems.append(f"level {k}: C point {i} row is not a unit row")
        for i in np.flatnonzero(label == Label.F).tolist():
            Ci = set(setup.interp.sets[i].tolist())
            if not Ci:
                problems.append(f"level {k}: F point {i} has no interpolatory points")
            if not Ci <= strong[i] or not all(label[c] == Label.C for c in Ci):
                problems.append(f"level {k}: F point {i} interpolates from non strong-C points")
            for j in strong[i] - Ci:
                if not (strong[j] & Ci):
                    problems.append(f"level {k}: F points {i}, {j} share no interpolatory point")
        # duality of the strength graph
        infl = [set(s.tolist()) for s in setup.graph.influence]
        for i in range(n):
            for j in strong[i]:
                if i not in infl[j]:
                    problems.append(f"level {k}: {j} in S_{i} but {i} not in S^T_{j}")
            for j in infl[i]:
                if i not in strong[j]:
                    problems.append(f"level {k}: {j} in S^T_{i} but {i} not in S_{j}")
    return problems


def dense_rap(P: SparseMatrix, A: SparseMatrix) -> np.ndarray:
    Pd = P.to_dense()
    return Pd.T @ A.to_dense() @ Pd


def galerkin_errors(h: Hierarchy) -> list[float]:
    """Relative difference between each stored coarse pair and the dense
    triple product of its parent."""
    errs = []
    for k, P in enumerate(h.prolongations):
        for X in (h.A, h.M):
            errs.append(rel_err(X[k + 1].to_dense(), dense_rap(P, X[k])))
    return errs


def char_poly_3x3(A, M):
    """Coefficients (highest degree first) of det(A - lam M), expanded by
    multilinearity in the columns."""
    coef = np.zeros(4)
    for cols in itertools.product((0, 1), repeat=3):
        mixed = np.column_stack([(-M if c else A)[:, i] for i, c in enumerate(cols)])
        coef[3 - sum(cols)] += np.linalg.det(mixed)
    return coef


def cubic_real_roots(coef):
    """Three real roots of a cubic by the trigonometric method, polished by
    Newton steps on the polynomial."""
    a, b, c, d = coef
    b, c, d = b / a, c / a, d / a
    p = c - b * b / 3
    q = 2 * b**3 / 27 - b * c / 3 + d
    r = 2 * math.sqrt(max(-p / 3, 0.0))
    arg = 0.0 if r == 0 else max(-1.0, min(1.0, 3 * q / (p * r)))
    phi = math.acos(arg) / 3
    roots = [r * math.cos(phi - 2 * math.pi * k / 3) - b / 3 for k in range(3)]
    poly, dpoly = np.poly1d([1, b, c, d]), np.poly1d([3, 2 * b, c])
    polished = []
    for x in roots:
        for _ in range(5):
            dp = dpoly(x)
            if dp == 0:
                break
            x -= poly(x) / dp
        polished.append(x)
    return np.sort(polished)


def random_spd(rng, n, shift=0.1):
    B = rng.standard_normal((n, n))
    return B @ B.T + shift * np.eye(n)



__all__ = [
    "char_poly_3x3",
    "cubic_real_roots",
    "random_spd",
    "coarsening_violations",
    "dense_rap",
    "galerkin_errors",
    "random_pair",
    "random_sparse",
    "rel_err",
    "tridiag",
]
