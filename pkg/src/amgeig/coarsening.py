"""Ruge-Stuben coarsening: strength of connection, C/F splitting, interpolation.

All index sets are 0-based.  Ties in the C-point selection are broken by the
lowest point index so the splitting is a deterministic function of the matrix.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .sparse import SparseMatrix


class Label(IntEnum):
    U = 0
    C = 1
    F = 2


class CoarseningError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class StrengthGraph:
    """Strong dependences ``strong[i]``, their transpose ``influence[i]`` and
    the sparsity neighbourhoods ``neighbors[i]`` (diagonal excluded)."""

    theta: float
    strong: list[np.ndarray]
    influence: list[np.ndarray]
    neighbors: list[np.ndarray]

    @property
    def size(self) -> int:
        return len(self.strong)


@dataclass(frozen=True, eq=False)
class CfSplit:
    label: np.ndarray
    weight: np.ndarray

    @property
    def coarse_points(self) -> np.ndarray:
        return np.flatnonzero(self.label == Label.C)

    @property
    def fine_points(self) -> np.ndarray:
        return np.flatnonzero(self.label == Label.F)


@dataclass(frozen=True, eq=False)
class Interpolation:
    """Interpolatory sets and weights of the F points (C points interpolate
    themselves with weight one and have no entry here)."""

    sets: dict[int, np.ndarray]
    weights: dict[int, np.ndarray]


def _split_rows(rows: np.ndarray, cols: np.ndarray, n: int) -> list[np.ndarray]:
    # rows must be sorted ascending
    counts = np.bincount(rows, minlength=n)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    return [cols[bounds[i]:bounds[i + 1]] for i in range(n)]


def strength_sets(A: SparseMatrix, theta: float = 0.25) -> StrengthGraph:
    """Classify the off-diagonal couplings of ``A`` as strong or weak.

    ``j`` is a strong dependence of ``i`` when
    ``|a_ij| >= theta * max_{l != i} |a_il|``.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if A.nrows != A.ncols:
        raise ValueError(f"strength_sets needs a square matrix, got {A.shape}")
    n = A.nrows
    rows, cols, vals = A.triplets()
    off = (rows != cols) & (vals != 0.0)
    rows, cols, mag = rows[off], cols[off], np.abs(vals[off])

    row_max = np.zeros(n)
    np.maximum.at(row_max, rows, mag)
    is_strong = mag >= theta * row_max[rows]

    neighbors = _split_rows(rows, cols, n)
    strong = _split_rows(rows[is_strong], cols[is_strong], n)
    # transpose of the strong pattern: sort by column, then by row
    srows, scols = rows[is_strong], cols[is_strong]
    order = np.lexsort((srows, scols))
    influence = _split_rows(scols[order], srows[order], n)
    return StrengthGraph(theta, strong, influence, neighbors)


def coarsen_preliminary(g: StrengthGraph) -> CfSplit:
    """First-pass C/F splitting driven by the influence counts.

    Repeatedly promotes the undecided point with the largest weight to C,
    makes the undecided points it strongly influences F, and updates the
    weights so that points the new F points depend on become more attractive.
    """
    n = g.size
    weight = np.array([len(s) for s in g.influence], dtype=np.int64)
    q = weight.copy()
    label = np.full(n, Label.U, dtype=np.int8)
    heap = [(-int(q[i]), i) for i in range(n)]
    heapq.heapify(heap)
    undecided = n

    while undecided:
        negq, i = heapq.heappop(heap)
        if label[i] != Label.U or -negq != q[i]:
            continue  # stale heap entry
        label[i] = Label.C
        undecided -= 1
        for j in g.influence[i]:
            if label[j] != Label.U:
                continue
            label[j] = Label.F
            undecided -= 1
            for l in g.strong[j]:
                if label[l] == Label.U:
                    q[l] += 1
                    heapq.heappush(heap, (-int(q[l]), int(l)))
        for j in g.strong[i]:
            if label[j] == Label.U:
                q[j] -= 1
                heapq.heappush(heap, (-int(q[j]), int(j)))
    return CfSplit(label, weight)


def finalize_interpolation(
    A: SparseMatrix, g: StrengthGraph, split: CfSplit
) -> tuple[CfSplit, Interpolation]:
    """Second pass: interpolation weights for every F point, promoting F points
    to C where two strong F neighbours share no interpolatory point.

    Weak connections are lumped into the diagonal; strong F neighbours are
    distributed over the interpolatory set in proportion to their own
    couplings to it.
    """
    n = g.size
    label = split.label.copy()
    rowdict = []
    rownorm = np.zeros(n)
    diag = np.zeros(n)
    for i in range(n):
        cols, vals = A.row(i)
        rowdict.append(dict(zip(cols.tolist(), vals.tolist())))
        rownorm[i] = np.abs(vals).max(initial=0.0)
        diag[i] = rowdict[i].get(i, 0.0)
    strong = [set(s.tolist()) for s in g.strong]

    sets: dict[int, np.ndarray] = {}
    weights: dict[int, np.ndarray] = {}

    for i in range(n):
        if label[i] != Label.F:
            continue
        a_i = rowdict[i]
        s_i = sorted(strong[i])
        interp = [j for j in s_i if label[j] == Label.C]
        strong_fine = [j for j in s_i if label[j] != Label.C]
        weak_sum = sum(a_i[j] for j in g.neighbors[i].tolist() if j not in strong[i])
        tentative = None
        promote = False

        while True:
            d_i = diag[i] + weak_sum
            d = {k: a_i.get(k, 0.0) for k in interp}
            restart = False
            for j in strong_fine:
                interp_set = set(interp)
                if strong[j] & interp_set:
                    a_j = rowdict[j]
                    denom = sum(a_j.get(l, 0.0) for l in interp)
                    if abs(denom) < 1e-12 * rownorm[j]:
                        promote = True
                        break
                    for k in interp:
                        d[k] += a_i[j] * a_j.get(k, 0.0) / denom
                elif tentative is not None:
                    promote = True
                    break
                else:
                    tentative = j
                    interp.append(j)
                    strong_fine.remove(j)
                    restart = True
                    break
            if promote or not restart:
                break

        if promote:
            label[i] = Label.C
            continue
        if tentative is not None:
            label[tentative] = Label.C
        if abs(d_i) < 1e-12 * rownorm[i]:
            raise CoarseningError(
                f"degenerate lumped diagonal {d_i:.3e} at point {i} (row norm {rownorm[i]:.3e})"
            )
        ks = np.array(interp, dtype=np.int64)
        w = np.array([-d[k] / d_i for k in interp])
        order = np.argsort(ks)
        sets[i], weights[i] = ks[order], w[order]

    # drop rows of points that were promoted after their weights were computed
    final_f = set(np.flatnonzero(label == Label.F).tolist())
    sets = {i: s for i, s in sets.items() if i in final_f}
    weights = {i: w for i, w in weights.items() if i in final_f}
    return CfSplit(label, split.weight.copy()), Interpolation(sets, weights)


def assemble_prolongation(split: CfSplit, interp: Interpolation) -> SparseMatrix:
    """Prolongation with unit rows at C points and the interpolation weights at
    F points; coarse unknowns are numbered by ascending fine index."""
    label = split.label
    if np.any(label == Label.U):
        raise CoarseningError("splitting still has undecided points")
    n = len(label)
    cpts = np.flatnonzero(label == Label.C)
    coarse_index = np.full(n, -1, dtype=np.int64)
    coarse_index[cpts] = np.arange(len(cpts))

    rows, cols, vals = [cpts], [coarse_index[cpts]], [np.ones(len(cpts))]
    for i in np.flatnonzero(label == Label.F).tolist():
        ks = interp.sets.get(i)
        if ks is None or len(ks) == 0:
            raise CoarseningError(f"F point {i} has no interpolatory C points")
        ci = coarse_index[ks]
        if np.any(ci < 0):
            raise CoarseningError(f"F point {i} interpolates from a non-C point")
        rows.append(np.full(len(ks), i))
        cols.append(ci)
        vals.append(interp.weights[i])
    return SparseMatrix.from_coo(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (n, len(cpts))
    )
