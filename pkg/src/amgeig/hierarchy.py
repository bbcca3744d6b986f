"""Multilevel hierarchy: repeated coarsening plus Galerkin coarse pairs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .coarsening import (
    CfSplit,
    Interpolation,
    StrengthGraph,
    assemble_prolongation,
    coarsen_preliminary,
    finalize_interpolation,
    strength_sets,
)
from .sparse import DimensionError, SparseMatrix, matmul, rap, symmetry_error

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SetupParams:
    theta: float = 0.25
    max_coarse_dim: int = 500
    max_levels: int = 25
    min_coarsening_ratio: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.max_levels < 1:
            raise ValueError("max_levels must be at least 1")


@dataclass(frozen=True, eq=False)
class LevelSetup:
    """Coarsening artifacts kept for inspection of one fine level."""

    graph: StrengthGraph
    split: CfSplit
    interp: Interpolation


@dataclass(frozen=True, eq=False)
class Hierarchy:
    """Levels ``0 .. n-1`` from finest to coarsest.

    ``prolongations[k]`` maps level ``k+1`` to level ``k``.  The Cholesky
    factors of the coarsest ``A`` and ``M`` are computed once here and shared
    by every solve that uses this hierarchy.
    """

    A: list[SparseMatrix]
    M: list[SparseMatrix]
    prolongations: list[SparseMatrix]
    params: SetupParams
    setups: list[LevelSetup] = field(default_factory=list)

    def __post_init__(self):
        if len(self.A) != len(self.M) or len(self.prolongations) != len(self.A) - 1:
            raise ValueError("inconsistent hierarchy lengths")
        n = len(self.A) - 1
        to_coarsest = [None] * (n + 1)
        to_coarsest[n] = SparseMatrix.identity(self.A[n].nrows)
        for k in range(n - 1, -1, -1):
            to_coarsest[k] = matmul(self.prolongations[k], to_coarsest[k + 1])
        object.__setattr__(self, "_to_coarsest", to_coarsest)
        object.__setattr__(self, "coarse_A_factor", _cholesky(self.A[n].to_dense(), "A"))
        object.__setattr__(self, "coarse_M_factor", _cholesky(self.M[n].to_dense(), "M"))

    @property
    def num_levels(self) -> int:
        return len(self.A)

    @property
    def coarsest(self) -> int:
        return len(self.A) - 1

    @property
    def dims(self) -> list[int]:
        return [a.nrows for a in self.A]


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def _cholesky(a: np.ndarray, name: str):
    # the hierarchy is also used for problems where the coarse matrix is only
    # needed for projections; failures are deferred to first use
    try:
        return sla.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        return SingularMatrixError(f"coarsest {name} is not positive definite: {exc}")


def build_hierarchy(
    A: SparseMatrix, M: SparseMatrix, params: SetupParams | None = None
) -> Hierarchy:
    """Coarsen ``A`` until it is small enough; ``M`` follows with the same
    transfer operators."""
    params = params or SetupParams()
    if A.shape != M.shape or A.nrows != A.ncols:
        raise DimensionError(f"need square A, M of one size, got {A.shape} and {M.shape}")
    for name, X in (("A", A), ("M", M)):
        err = symmetry_error(X)
        if err > 1e-12:
            raise ValueError(f"{name} is not symmetric (relative asymmetry {err:.2e})")

    As, Ms, Ps, setups = [A], [M], [], []
    while As[-1].nrows > params.max_coarse_dim and len(As) < params.max_levels:
        Ak = As[-1]
        g = strength_sets(Ak, params.theta)
        split, interp = finalize_interpolation(Ak, g, coarsen_preliminary(g))
        P = assemble_prolongation(split, interp)
        if P.ncols == 0 or P.ncols > params.min_coarsening_ratio * Ak.nrows:
            log.info("coarsening stalled at level %d (%d -> %d)", len(As) - 1, Ak.nrows, P.ncols)
            break
        Ps.append(P)
        setups.append(LevelSetup(g, split, interp))
        As.append(rap(P, Ak))
        Ms.append(rap(P, Ms[-1]))
        log.debug("level %d: %d unknowns", len(As) - 1, P.ncols)
    return Hierarchy(As, Ms, Ps, params, setups)


def composite_transfer(h: Hierarchy, k: int, n: int) -> SparseMatrix:
    """Prolongation from level ``n`` to level ``k`` (``k <= n``), the product
    ``P_k P_{k+1} ... P_{n-1}``; identity when ``k == n``."""
    if not 0 <= k <= n < h.num_levels:
        raise IndexError(f"need 0 <= k <= n < {h.num_levels}, got k={k}, n={n}")
    if n == h.coarsest:
        return h._to_coarsest[k]
    result = SparseMatrix.identity(h.A[n].nrows)
    for level in range(n - 1, k - 1, -1):
        result = matmul(h.prolongations[level], result)
    return result
