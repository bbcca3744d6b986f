"""Convergence experiments: AMG eigensolver against a dense direct oracle."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .correction import CorrectionParams, amg_eigensolve, default_start_level
from .dense_eig import DenseSymPair, EigenpairSet, generalized_eig, refine_with_rayleigh
from .fem import ProblemSpec, TriMesh, assemble_problem, load_mesh, structured_mesh
from .hierarchy import Hierarchy, SetupParams, build_hierarchy
from .mmio import write_matrix_market
from .solve import SolveParams
from .sparse import SparseMatrix

log = logging.getLogger(__name__)

ORACLE_MAX_DIM = 6000
ERROR_FLOOR = 1e-14
CSV_HEADER = ["P", "j", "lambda", "lambda_dir", "abs_err"]


class OracleTooLargeError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    structured: int | None = 32
    mesh_path: str | None = None
    q: int = 13
    theta: float = 0.25
    m: int = 2
    smooth: int = 2
    P: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    n1: int | None = None  # 0-based start level, None for the default
    max_coarse_dim: int = 500
    out: str = "errors.csv"
    dump_hierarchy: str | None = None
    raw: bool = False

    def __post_init__(self):
        if (self.structured is None) == (self.mesh_path is None):
            raise ValueError("exactly one of a structured size or a mesh path is required")
        if not self.P or any(p < 1 for p in self.P):
            raise ValueError("P must be a non-empty list of positive sweep counts")


def direct_oracle(A: SparseMatrix, M: SparseMatrix, q: int) -> EigenpairSet:
    """Dense reference eigenpairs; eigenvalues are the Rayleigh quotients of
    the dense eigenvectors, accurate well below the dense solver's roundoff."""
    if A.nrows > ORACLE_MAX_DIM:
        raise OracleTooLargeError(
            f"direct oracle limited to {ORACLE_MAX_DIM} unknowns, problem has {A.nrows}; "
            "use a smaller mesh"
        )
    return refine_with_rayleigh(A, M, generalized_eig(DenseSymPair(A.to_dense(), M.to_dense()), q))


_oracle_cache: dict[tuple, EigenpairSet] = {}


def cached_oracle(key: tuple, A: SparseMatrix, M: SparseMatrix, q: int) -> EigenpairSet:
    full_key = key + (q,)
    if full_key not in _oracle_cache:
        _oracle_cache[full_key] = direct_oracle(A, M, q)
    return _oracle_cache[full_key]


def load_problem_mesh(cfg: ExperimentConfig) -> TriMesh:
    if cfg.mesh_path is not None:
        mesh, flipped = load_mesh(cfg.mesh_path)
        if flipped:
            log.warning("reoriented %d triangles of %s", flipped, cfg.mesh_path)
        return mesh
    return structured_mesh(cfg.structured)


def dump_hierarchy(h: Hierarchy, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k in range(h.num_levels):
        write_matrix_market(h.A[k], directory / f"A_{k + 1}.mtx")
        write_matrix_market(h.M[k], directory / f"M_{k + 1}.mtx")
    for k, P in enumerate(h.prolongations):
        write_matrix_market(P, directory / f"P_{k + 1}.mtx")


def caption(dims: list[int], n1: int) -> str:
    """``N_Dof=[d_1, ..., d_L] and n_1=k`` with a 1-based start level."""
    return f"N_Dof=[{', '.join(str(d) for d in dims)}] and n_1={n1 + 1}"


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the AMG eigensolver for every sweep count in ``cfg.P`` and write
    the error table to ``cfg.out`` plus ``<out>.meta.json``.

    Returns the metadata dictionary.
    """
    timings = {}
    t0 = time.perf_counter()
    mesh = load_problem_mesh(cfg)
    A, M, _ = assemble_problem(mesh, cfg.problem)
    timings["assemble"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    h = build_hierarchy(A, M, SetupParams(theta=cfg.theta, max_coarse_dim=cfg.max_coarse_dim))
    timings["setup"] = time.perf_counter() - t0
    if cfg.dump_hierarchy:
        dump_hierarchy(h, cfg.dump_hierarchy)

    t0 = time.perf_counter()
    key = (mesh.fingerprint(), cfg.problem.kind, tuple(cfg.problem.Z), cfg.problem.clamp_radius)
    oracle = cached_oracle(key, A, M, cfg.q)
    timings["oracle"] = time.perf_counter() - t0

    n1 = default_start_level(h) if cfg.n1 is None else cfg.n1
    solve = SolveParams(pre_smooth_steps=cfg.smooth, post_smooth_steps=cfg.smooth)
    rows = []
    timings["amg"] = {}
    for P in sorted(cfg.P):
        t0 = time.perf_counter()
        result = amg_eigensolve(h, CorrectionParams(q=cfg.q, m=cfg.m, sweeps=P, n1=n1, solve=solve))
        timings["amg"][P] = time.perf_counter() - t0
        for j, (lam, lam_dir) in enumerate(zip(result.pairs.values, oracle.values), 1):
            rows.append((P, j, float(lam), float(lam_dir), abs(float(lam) - float(lam_dir))))

    out = Path(cfg.out)
    meta_path = out.with_name(out.name + ".meta.json")
    meta = {
        "dims": h.dims,
        "n1": n1 + 1,
        "caption": caption(h.dims, n1),
        "config": {**asdict(cfg), "problem": asdict(cfg.problem)},
        "timings_s": timings,
    }
    try:
        write_error_csv(out, rows, cfg.raw)
        with open(meta_path, "w") as fh:
            json.dump(meta, fh, indent=2, default=str)
    except BaseException:
        for path in (out, meta_path):
            if path.exists():
                os.unlink(path)
        raise
    return meta


def write_error_csv(path, rows, raw: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER + (["abs_err_raw"] if raw else []))
        for P, j, lam, lam_dir, err in sorted(rows):
            line = [P, j, repr(lam), repr(lam_dir), repr(max(err, ERROR_FLOOR))]
            if raw:
                line.append(repr(err))
            w.writerow(line)


def read_error_csv(path) -> dict[int, np.ndarray]:
    """Map each sweep count P to its array of (clamped) errors ordered by j."""
    table: dict[int, list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            table.setdefault(int(row["P"]), []).append((int(row["j"]), float(row["abs_err"])))
    return {P: np.array([e for _, e in sorted(v)]) for P, v in table.items()}
