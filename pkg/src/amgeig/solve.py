"""Linear AMG: CG smoothing, V-cycles, and the fixed-count iteration driver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .hierarchy import Hierarchy, SingularMatrixError
from .sparse import DimensionError, SparseMatrix, spmv


@dataclass(frozen=True)
class SolveParams:
    pre_smooth_steps: int = 2
    post_smooth_steps: int = 2
    cycle: str = "V"

    def __post_init__(self):
        if self.pre_smooth_steps < 0 or self.post_smooth_steps < 0:
            raise ValueError("smoothing step counts must be non-negative")
        if self.cycle != "V":
            raise ValueError(f"only V-cycles are implemented, got {self.cycle!r}")


def cg_smooth(A: SparseMatrix, b, x0, steps: int) -> tuple[np.ndarray, bool]:
    """Run exactly ``steps`` conjugate-gradient iterations from ``x0``.

    Returns the iterate and a breakdown flag.  Breakdown (vanishing residual or
    non-positive curvature) stops the iteration early at the current iterate.
    """
    b = np.asarray(b, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    if b.shape != (A.nrows,) or x.shape != (A.ncols,):
        raise DimensionError(f"cg_smooth: A is {A.shape}, b {b.shape}, x0 {x.shape}")
    if steps == 0:
        return x, False
    r = b - spmv(A, x)
    p = r.copy()
    rr = r @ r
    for _ in range(steps):
        if rr == 0.0:
            return x, True
        Ap = spmv(A, p)
        curv = p @ Ap
        if curv <= 1e-14 * np.sqrt(rr) * np.linalg.norm(Ap):
            return x, True
        alpha = rr / curv
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, False


def coarse_direct_solve(A: SparseMatrix, b, factor=None) -> np.ndarray:
    """Dense Cholesky solve of ``A x = b``; ``factor`` reuses a cached
    ``cho_factor`` result (or the error recorded when it failed)."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != A.nrows:
        raise DimensionError(f"coarse solve: A is {A.shape}, b has {b.shape[0]} rows")
    if factor is None:
        try:
            factor = sla.cho_factor(A.to_dense(), lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"coarse matrix is not positive definite: {exc}") from None
    if isinstance(factor, Exception):
        raise factor
    return sla.cho_solve(factor, b, check_finite=False)


def vcycle(h: Hierarchy, k: int, b, x0, p: SolveParams | None = None) -> np.ndarray:
    p = p or SolveParams()
    A = h.A[k]
    if k == h.coarsest:
        return coarse_direct_solve(A, b, h.coarse_A_factor)
    x, _ = cg_smooth(A, b, x0, p.pre_smooth_steps)
    P = h.prolongations[k]
    r_coarse = P.csr.T @ (b - spmv(A, x))
    e = vcycle(h, k + 1, r_coarse, np.zeros(P.ncols), p)
    x += spmv(P, e)
    x, _ = cg_smooth(A, b, x, p.post_smooth_steps)
    return x


def amg_iterate(h: Hierarchy, k: int, rhs, x0, m: int, p: SolveParams | None = None) -> np.ndarray:
    """Apply ``m`` V-cycles to ``A_k x = rhs`` starting from ``x0``."""
    if not 0 <= k < h.num_levels:
        raise IndexError(f"level {k} outside hierarchy of {h.num_levels} levels")
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    if rhs.shape != (h.A[k].nrows,) or x.shape != rhs.shape:
        raise DimensionError(f"amg_iterate: level {k} has {h.A[k].nrows} unknowns")
    for _ in range(m):
        x = vcycle(h, k, rhs, x, p)
    return x
