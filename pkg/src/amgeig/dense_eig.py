"""Dense symmetric-definite generalized eigenproblems ``A x = lambda M x``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, pivot: int):
        super().__init__(f"M is not positive definite: Cholesky pivot {pivot} failed")
        self.pivot = pivot


@dataclass(frozen=True, eq=False)
class DenseSymPair:
    A: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        M = np.asarray(self.M, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != M.shape:
            raise ValueError(f"need square A, M of one size, got {A.shape} and {M.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "M", M)

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class EigenpairSet:
    """Ascending eigenvalues with M-normalized eigenvectors stored as columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return len(self.values)


def fix_signs(X: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Flip columns so the first entry larger than ``tol`` in magnitude is positive."""
    X = X.copy()
    for j in range(X.shape[1]):
        big = np.flatnonzero(np.abs(X[:, j]) > tol)
        if len(big) and X[big[0], j] < 0:
            X[:, j] *= -1.0
    return X


def generalized_eig(p: DenseSymPair, q: int) -> EigenpairSet:
    """The ``q`` algebraically smallest eigenpairs of ``(A, M)``.

    ``M`` is factored as ``L L^T``; the standard problem
    ``L^{-1} A L^{-T} y = lambda y`` is solved by LAPACK's symmetric
    eigensolver and ``x = L^{-T} y`` is mapped back.
    """
    n = p.dim
    if not 1 <= q <= n:
        raise ValueError(f"q must lie in [1, {n}], got {q}")
    L, info = lapack.dpotrf(p.M, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    C = sla.solve_triangular(L, p.A, lower=True, check_finite=False)
    C = sla.solve_triangular(L, C.T, lower=True, check_finite=False)
    C = 0.5 * (C + C.T)
    w, Y = sla.eigh(C, subset_by_index=(0, q - 1), check_finite=False)
    X = sla.solve_triangular(L, Y, lower=True, trans="T", check_finite=False)
    norms = np.sqrt(np.einsum("ij,ij->j", X, p.M @ X))
    X = fix_signs(X / norms)
    return EigenpairSet(w, X)


def rayleigh_quotients(A, M, U: np.ndarray) -> np.ndarray:
    """``u^T A u / u^T M u`` for every column, summed with ``math.fsum``.

    For an accurate eigenvector this is far less sensitive to roundoff than
    the eigenvalue returned by a dense solver, whose error scales with the
    largest eigenvalue of the pair.
    """
    AU, MU = A @ U, M @ U
    return np.array(
        [math.fsum(U[:, j] * AU[:, j]) / math.fsum(U[:, j] * MU[:, j]) for j in range(U.shape[1])]
    )


def refine_with_rayleigh(A, M, pairs: EigenpairSet) -> EigenpairSet:
    """Replace eigenvalues by Rayleigh quotients and restore ascending order."""
    values = rayleigh_quotients(A, M, pairs.vectors)
    order = np.argsort(values, kind="stable")
    return EigenpairSet(values[order], pairs.vectors[:, order])
