"""Matrix Market coordinate files (real, general or symmetric)."""
from __future__ import annotations

import os

import numpy as np

from .sparse import SparseMatrix


class MatrixMarketError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def read_matrix_market(path) -> SparseMatrix:
    """Read a coordinate Matrix Market file.

    Symmetric files store one triangle; the mirror entries are filled in so
    the result always uses full storage.  Duplicate entries are summed.
    """
    path = os.fspath(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    header = lines[0].split()
    if (
        len(header) != 5
        or header[0] != "%%MatrixMarket"
        or header[1].lower() != "matrix"
        or header[2].lower() != "coordinate"
        or header[3].lower() != "real"
        or header[4].lower() not in ("general", "symmetric")
    ):
        raise MatrixMarketError(path, 1, f"unsupported header {lines[0]!r}")
    symmetric = header[4].lower() == "symmetric"

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size = text.split()
            break
    if size is None:
        raise MatrixMarketError(path, lineno, "missing size line")
    try:
        nrows, ncols, nnz = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(path, lineno, f"bad size line {lines[lineno - 1]!r}") from None

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    count = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError(path, lineno, f"expected 'row col value', got {text!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except ValueError:
            raise MatrixMarketError(path, lineno, f"non-numeric entry {text!r}") from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(path, lineno, f"index ({i}, {j}) outside {nrows}x{ncols}")
        if symmetric and j > i:
            raise MatrixMarketError(path, lineno, "symmetric file lists an upper-triangle entry")
        if count == nnz:
            raise MatrixMarketError(path, lineno, f"more than the declared {nnz} entries")
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise MatrixMarketError(path, len(lines), f"declared {nnz} entries, found {count}")

    if symmetric:
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    return SparseMatrix.from_coo(rows, cols, vals, (nrows, ncols))


def write_matrix_market(A: SparseMatrix, path) -> None:
    """Write ``A`` in general coordinate format with round-trip float precision."""
    rows, cols, vals = A.triplets()
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
