"""Multilevel correction eigensolver on an AMG hierarchy.

A correction step on level ``k`` smooths each current eigenvector with a few
AMG iterations for ``A_k u = lambda M_k u`` and then solves a small
eigenproblem in the space spanned by the coarsest-level prolongations plus
the smoothed vectors.  The nested driver starts on a coarse level and walks
up to the finest one, performing a fixed number of corrections per level.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .dense_eig import DenseSymPair, EigenpairSet, fix_signs, generalized_eig, refine_with_rayleigh
from .hierarchy import Hierarchy, composite_transfer
from .solve import SolveParams, amg_iterate
from .sparse import DimensionError, spmv


class ConditioningError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class CorrectionParams:
    """``sweeps`` is either one count used on every level or a mapping
    ``level -> count``; ``n1`` is the (0-based) starting level, ``None`` for
    the default choice made by :func:`default_start_level`."""

    q: int
    m: int = 2
    sweeps: int | dict[int, int] = 1
    n1: int | None = None
    solve: SolveParams = field(default_factory=SolveParams)

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if self.m < 0:
            raise ValueError("m must be non-negative")
        counts = self.sweeps.values() if isinstance(self.sweeps, dict) else [self.sweeps]
        if any(c < 1 for c in counts):
            raise ValueError("sweep counts must be at least 1")

    def sweeps_on(self, level: int) -> int:
        if isinstance(self.sweeps, dict):
            return self.sweeps.get(level, 1)
        return self.sweeps


@dataclass(frozen=True, eq=False)
class EigensolveResult:
    pairs: EigenpairSet
    history: list[tuple[int, int, np.ndarray]]
    start_level: int


def default_start_level(h: Hierarchy) -> int:
    """One level above the coarsest; the coarsest itself for two-level
    hierarchies, where the level above would already be the finest."""
    if h.num_levels <= 2:
        return h.coarsest
    return h.coarsest - 1


def m_normalize(M, U: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->j", U, spmv(M, U)))
    return U / norms


def smoothed_basis(
    h: Hierarchy, k: int, pairs: EigenpairSet, m: int, solve: SolveParams | None = None
) -> np.ndarray:
    """Columns ``AMG(k, lambda_j M_k u_j, u_j, m)`` for every current pair."""
    U = pairs.vectors
    if U.shape[0] != h.A[k].nrows:
        raise DimensionError(f"pairs have {U.shape[0]} rows, level {k} has {h.A[k].nrows}")
    rhs = spmv(h.M[k], U) * pairs.values
    return np.column_stack(
        [amg_iterate(h, k, rhs[:, j], U[:, j], m, solve) for j in range(U.shape[1])]
    )


def orthonormalize_against_coarse(
    h: Hierarchy, k: int, V: np.ndarray, drop_tol: float = 1e-10
) -> np.ndarray:
    """M_k-orthonormal basis of the part of ``span(V)`` not already in the
    range of the coarsest-level prolongation.

    Columns whose M_k-norm falls below ``drop_tol`` times their original norm
    are dropped, so the augmented mass matrix stays positive definite.
    """
    Mk = h.M[k]
    P = composite_transfer(h, k, h.coarsest)
    factor = h.coarse_M_factor
    if isinstance(factor, Exception):
        raise factor

    def project(W):
        return W - spmv(P, sla.cho_solve(factor, P.csr.T @ spmv(Mk, W), check_finite=False))

    def mnorm(w):
        return np.sqrt(max(w @ spmv(Mk, w), 0.0))

    W = project(project(V))
    basis = []
    for j in range(W.shape[1]):
        w = W[:, j].copy()
        ref = mnorm(V[:, j])
        for _ in range(2):
            for b in basis:
                w -= (b @ spmv(Mk, w)) * b
        nrm = mnorm(w)
        if ref == 0.0 or nrm < drop_tol * ref:
            continue
        basis.append(w / nrm)
    if not basis:
        return np.zeros((V.shape[0], 0))
    return np.column_stack(basis)


def assemble_augmented(h: Hierarchy, k: int, V: np.ndarray) -> DenseSymPair:
    """Coarsest pair bordered by the smoothed block ``V`` of level ``k``."""
    n = h.coarsest
    if V.ndim != 2 or V.shape[0] != h.A[k].nrows:
        raise DimensionError(f"V must have {h.A[k].nrows} rows, got shape {V.shape}")
    P = composite_transfer(h, k, n)
    blocks = []
    for coarse, fine in ((h.A[n], h.A[k]), (h.M[n], h.M[k])):
        XV = spmv(fine, V)
        top = np.hstack([coarse.to_dense(), P.csr.T @ XV])
        bottom = np.hstack([(P.csr.T @ XV).T, V.T @ XV])
        full = np.vstack([top, bottom])
        full = 0.5 * (full + full.T)
        blocks.append(full)
    return DenseSymPair(blocks[0], blocks[1])


def correction_step(
    h: Hierarchy, k: int, pairs: EigenpairSet, params: CorrectionParams
) -> EigenpairSet:
    """One smoothing + coarse-space Rayleigh-Ritz correction on level ``k``."""
    q = len(pairs)
    n = h.coarsest
    V = smoothed_basis(h, k, pairs, params.m, params.solve)
    V = orthonormalize_against_coarse(h, k, V)
    aug = assemble_augmented(h, k, V)
    if aug.dim < q:
        raise ConditioningError(
            f"augmented space has dimension {aug.dim}, fewer than the {q} wanted pairs"
        )
    try:
        sol = generalized_eig(aug, q)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"augmented eigenproblem on level {k}: {exc}") from exc
    dn = h.A[n].nrows
    P = composite_transfer(h, k, n)
    U = spmv(P, sol.vectors[:dn]) + V @ sol.vectors[dn:]
    U = fix_signs(m_normalize(h.M[k], U))
    # same value as the Ritz value in exact arithmetic, with less roundoff
    return refine_with_rayleigh(h.A[k], h.M[k], EigenpairSet(sol.values, U))


def amg_eigensolve(h: Hierarchy, params: CorrectionParams) -> EigensolveResult:
    """Nested multilevel correction from the start level up to the finest.

    ``history`` holds ``(level, sweep, eigenvalues)`` after the initial
    solve (sweep 0 on the start level) and after every correction.
    """
    n1 = default_start_level(h) if params.n1 is None else params.n1
    if not 0 <= n1 < h.num_levels:
        raise IndexError(f"start level {n1} outside hierarchy of {h.num_levels} levels")
    if h.A[n1].nrows < params.q:
        raise ValueError(f"start level {n1} has {h.A[n1].nrows} unknowns, fewer than q={params.q}")

    pairs = generalized_eig(DenseSymPair(h.A[n1].to_dense(), h.M[n1].to_dense()), params.q)
    pairs = refine_with_rayleigh(h.A[n1], h.M[n1], pairs)
    history = [(n1, 0, pairs.values.copy())]
    for k in range(n1 - 1, -1, -1):
        U = m_normalize(h.M[k], spmv(h.prolongations[k], pairs.vectors))
        pairs = EigenpairSet(pairs.values, U)
        for sweep in range(1, params.sweeps_on(k) + 1):
            pairs = correction_step(h, k, pairs, params)
            history.append((k, sweep, pairs.values.copy()))
    return EigensolveResult(pairs, history, n1)
