"""Compressed-row sparse matrices and the kernels built on them.

The storage is plain CSR (``row_offsets``, ``col_indices``, ``values``) kept in
canonical form: sorted, duplicate-free column indices in every row.  Products
are delegated to :mod:`scipy.sparse`, which works on the same three arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class DimensionError(ValueError):
    """Operand shapes do not agree."""


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    nrows: int
    ncols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro = np.asarray(self.row_offsets, dtype=np.int64)
        ci = np.asarray(self.col_indices, dtype=np.int64)
        va = np.asarray(self.values, dtype=np.float64)
        if ro.shape != (self.nrows + 1,):
            raise ValueError("row_offsets must have length nrows + 1")
        if ro[0] != 0 or ro[-1] != len(va) or len(ci) != len(va):
            raise ValueError("row_offsets inconsistent with stored entries")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.ncols):
            raise ValueError("column index out of range")
        # strictly increasing columns inside each row
        if len(ci) > 1:
            step = np.diff(ci)
            row_start = np.zeros(len(ci), dtype=bool)
            row_start[ro[1:-1][ro[1:-1] < len(ci)]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ValueError("column indices must be strictly increasing within a row")
        for name, arr in (("row_offsets", ro), ("col_indices", ci), ("values", va)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Read-only scipy view sharing this matrix's arrays."""
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=self.shape, copy=False
        )

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        return cls.from_scipy(sp.csr_matrix(np.atleast_2d(np.asarray(a, dtype=np.float64))))

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "SparseMatrix":
        """Build from triplets; duplicate (row, col) pairs are summed."""
        return cls.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=shape))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n)
        return cls(n, n, np.arange(n + 1), idx, np.ones(n))

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_offsets))
        return rows, self.col_indices.copy(), self.values.copy()

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return matmul(self, other)
        return spmv(self, other)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """Return ``A @ x``.  ``x`` may be a vector or a dense block of columns."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != A.ncols:
        raise DimensionError(f"spmv: matrix has {A.ncols} columns, vector has {x.shape[0]} rows")
    return A.csr @ x


def transpose(A: SparseMatrix) -> SparseMatrix:
    return SparseMatrix.from_scipy(A.csr.T.tocsr())


def matmul(A: SparseMatrix, B: SparseMatrix) -> SparseMatrix:
    if A.ncols != B.nrows:
        raise DimensionError(f"matmul: {A.shape} times {B.shape}")
    return SparseMatrix.from_scipy(A.csr @ B.csr)


def add(A: SparseMatrix, B: SparseMatrix, alpha: float = 1.0, beta: float = 1.0) -> SparseMatrix:
    if A.shape != B.shape:
        raise DimensionError(f"add: {A.shape} vs {B.shape}")
    return SparseMatrix.from_scipy(alpha * A.csr + beta * B.csr)


def rap(P: SparseMatrix, A: SparseMatrix) -> SparseMatrix:
    """Galerkin triple product ``P^T A P``, symmetrized to remove roundoff skew."""
    if A.nrows != A.ncols:
        raise DimensionError(f"rap: A must be square, got {A.shape}")
    if P.nrows != A.nrows:
        raise DimensionError(f"rap: P has {P.nrows} rows, A has {A.nrows}")
    R = transpose(P)
    RAP = matmul(R, matmul(A, P)).csr
    return SparseMatrix.from_scipy(0.5 * (RAP + RAP.T))


def symmetry_error(A: SparseMatrix) -> float:
    """Relative asymmetry ``|A - A^T|_max / |A|_max`` (0 for an empty matrix)."""
    if A.nrows != A.ncols:
        return np.inf
    scale = np.abs(A.values).max(initial=0.0)
    if scale == 0.0:
        return 0.0
    diff = (A.csr - A.csr.T).tocsr()
    return float(np.abs(diff.data).max(initial=0.0) / scale)


def submatrix(A: SparseMatrix, keep: np.ndarray) -> SparseMatrix:
    """Rows and columns ``keep`` of ``A``, in the given order."""
    keep = np.asarray(keep, dtype=np.int64)
    return SparseMatrix.from_scipy(A.csr[keep][:, keep])
