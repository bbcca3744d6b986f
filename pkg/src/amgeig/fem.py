"""Linear finite elements on triangulations of the unit square.

Assembles the stiffness, mass and Coulomb-potential matrices over all mesh
vertices; homogeneous Dirichlet conditions are imposed afterwards by deleting
the boundary rows and columns.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sparse import SparseMatrix, add, submatrix

log = logging.getLogger(__name__)

_TOL = 1e-12


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    boundary: np.ndarray  # (nv,) bool

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def validate(self) -> None:
        areas = self.signed_areas()
        if np.any(areas <= 0):
            bad = int(np.flatnonzero(areas <= 0)[0])
            raise MeshError(f"triangle {bad} has non-positive signed area {areas[bad]:.3e}")
        if abs(areas.sum() - 1.0) > _TOL:
            raise MeshError(f"triangle areas sum to {areas.sum():.15g}, not 1")
        x, y = self.vertices[self.boundary].T
        dist = np.minimum.reduce([np.abs(x), np.abs(1 - x), np.abs(y), np.abs(1 - y)])
        if np.any(dist > _TOL):
            raise MeshError("a boundary-flagged vertex lies off the unit square's edge")

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for arr in (self.vertices, self.triangles, self.boundary):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class ProblemSpec:
    kind: str = "laplace"
    Z: tuple[float, float] = (0.5, 0.5)
    clamp_radius: float = 1e-10

    def __post_init__(self):
        if self.kind not in ("laplace", "coulomb"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == "coulomb" and not all(0 < z < 1 for z in self.Z):
            raise ValueError(f"Z={self.Z} must lie inside the unit square")


def structured_mesh(n: int) -> TriMesh:
    """Uniform ``n x n`` grid of the unit square, each cell cut along its
    lower-left to upper-right diagonal."""
    if n < 1:
        raise ValueError("n must be at least 1")
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t)  # vertex (i, j) has index j*(n+1) + i
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v0 = (j * (n + 1) + i).ravel()
    v1, v2, v3 = v0 + 1, v0 + n + 2, v0 + n + 1
    triangles = np.concatenate([np.column_stack([v0, v1, v2]), np.column_stack([v0, v2, v3])])
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    boundary = ((ii == 0) | (ii == n) | (jj == 0) | (jj == n)).ravel()
    return TriMesh(vertices, triangles, boundary)


def _data_lines(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if text:
                yield lineno, text.split()


def load_mesh(path) -> tuple[TriMesh, int]:
    """Read a mesh file; returns the mesh and the number of clockwise
    triangles that were reoriented."""
    path = os.fspath(path)
    lines = _data_lines(path)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise MeshError(f"{path}: empty mesh file") from None
    try:
        nv, nt = (int(t) for t in head)
    except ValueError:
        raise MeshError(f"{path}:{lineno}: expected 'nv nt', got {' '.join(head)!r}") from None

    vertices = np.empty((nv, 2))
    boundary = np.empty(nv, dtype=bool)
    triangles = np.empty((nt, 3), dtype=np.int64)
    for v in range(nv):
        lineno, parts = _next_record(lines, path, "vertex")
        try:
            x, y, b = float(parts[0]), float(parts[1]), int(parts[2])
            if len(parts) != 3 or b not in (0, 1):
                raise ValueError
        except (ValueError, IndexError):
            raise MeshError(f"{path}:{lineno}: expected 'x y b' with b in {{0,1}}") from None
        vertices[v] = x, y
        boundary[v] = bool(b)
    for t in range(nt):
        lineno, parts = _next_record(lines, path, "triangle")
        try:
            idx = [int(s) for s in parts]
            if len(idx) != 3:
                raise ValueError
        except ValueError:
            raise MeshError(f"{path}:{lineno}: expected 'i j k'") from None
        for i in idx:
            if not 1 <= i <= nv:
                raise MeshError(f"{path}:{lineno}: vertex index {i} outside 1..{nv}")
        triangles[t] = [i - 1 for i in idx]
        p = vertices[triangles[t]]
        e1, e2 = p[1] - p[0], p[2] - p[0]
        area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
        if area == 0.0:
            raise MeshError(f"{path}:{lineno}: degenerate triangle")
    extra = next(lines, None)
    if extra is not None:
        raise MeshError(f"{path}:{extra[0]}: unexpected trailing data")

    mesh = TriMesh(vertices, triangles, boundary)
    clockwise = mesh.signed_areas() < 0
    flipped = int(clockwise.sum())
    if flipped:
        log.warning("%s: reoriented %d clockwise triangles", path, flipped)
        triangles[clockwise] = triangles[clockwise][:, [0, 2, 1]]
    mesh.validate()
    return mesh, flipped


def _next_record(lines, path, what):
    try:
        return next(lines)
    except StopIteration:
        raise MeshError(f"{path}: file ended before all {what} records were read") from None


def save_mesh(mesh: TriMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{mesh.num_vertices} {mesh.num_triangles}\n")
        for (x, y), b in zip(mesh.vertices, mesh.boundary):
            fh.write(f"{float(x)!r} {float(y)!r} {int(b)}\n")
        for tri in mesh.triangles:
            fh.write(" ".join(str(int(i) + 1) for i in tri) + "\n")


def _geometry(mesh: TriMesh):
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        raise MeshError(f"degenerate or clockwise triangle {int(np.flatnonzero(areas <= 0)[0])}")
    return areas


def _assemble(mesh: TriMesh, local: np.ndarray) -> SparseMatrix:
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.num_vertices
    return SparseMatrix.from_coo(rows, cols, local.ravel(), (n, n))


def element_stiffness(mesh: TriMesh) -> np.ndarray:
    """Per-triangle 3x3 stiffness blocks ``|T| grad(phi_i) . grad(phi_j)``."""
    areas = _geometry(mesh)
    p = mesh.vertices[mesh.triangles]
    # gradient of barycentric phi_i is rot90 of the opposite edge / (2|T|)
    edges = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-edges[..., 1], edges[..., 0]], axis=-1) / (2 * areas)[:, None, None]
    return areas[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)


def assemble_stiffness(mesh: TriMesh) -> SparseMatrix:
    return _assemble(mesh, element_stiffness(mesh))


_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_mass(mesh: TriMesh) -> SparseMatrix:
    areas = _geometry(mesh)
    return _assemble(mesh, areas[:, None, None] * _MASS_REF)


# basis values at the three edge midpoints: midpoint of edge (a, b) has
# phi_a = phi_b = 1/2 and phi_c = 0
_MIDPOINT_PHI = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def assemble_weighted_mass(mesh: TriMesh, weight: Callable[[np.ndarray], np.ndarray]) -> SparseMatrix:
    """``int weight(x) phi_i phi_j`` by the edge-midpoint rule (exact for
    quadratics).  ``weight`` maps an ``(N, 2)`` array of points to values."""
    areas = _geometry(mesh)
    p = mesh.vertices[mesh.triangles]
    mids = np.einsum("qv,tvd->tqd", _MIDPOINT_PHI, p)
    w = np.asarray(weight(mids.reshape(-1, 2)), dtype=np.float64).reshape(-1, 3)
    local = np.einsum("tq,qi,qj->tij", w, _MIDPOINT_PHI, _MIDPOINT_PHI)
    return _assemble(mesh, (areas / 3.0)[:, None, None] * local)


def coulomb_potential(spec: ProblemSpec) -> Callable[[np.ndarray], np.ndarray]:
    Z = np.asarray(spec.Z, dtype=np.float64)

    def V(x):
        r = np.linalg.norm(x - Z, axis=1)
        return -1.0 / np.maximum(r, spec.clamp_radius)

    return V


def assemble_potential(mesh: TriMesh, spec: ProblemSpec) -> SparseMatrix:
    if spec.kind != "coulomb":
        raise ValueError("potential matrix is only defined for the coulomb problem")
    return assemble_weighted_mass(mesh, coulomb_potential(spec))


def apply_dirichlet(
    A: SparseMatrix, M: SparseMatrix, mesh: TriMesh
) -> tuple[SparseMatrix, SparseMatrix, np.ndarray]:
    """Delete boundary rows/columns; returns the interior-to-global index map."""
    interior = np.flatnonzero(~mesh.boundary)
    return submatrix(A, interior), submatrix(M, interior), interior


def assemble_problem(mesh: TriMesh, spec: ProblemSpec) -> tuple[SparseMatrix, SparseMatrix, np.ndarray]:
    """Interior ``(A, M)`` pair and index map for either model problem."""
    A = assemble_stiffness(mesh)
    if spec.kind == "coulomb":
        A = add(A, assemble_potential(mesh, spec))
    return apply_dirichlet(A, assemble_mass(mesh), mesh)
