"""Algebraic multigrid eigensolver for symmetric generalized problems
``A u = lambda M u`` based on multilevel correction."""
from .correction import (
    CorrectionParams,
    EigensolveResult,
    amg_eigensolve,
    assemble_augmented,
    correction_step,
    smoothed_basis,
)
from .dense_eig import DenseSymPair, EigenpairSet, generalized_eig
from .fem import ProblemSpec, TriMesh, assemble_problem, structured_mesh
from .hierarchy import Hierarchy, SetupParams, build_hierarchy, composite_transfer
from .solve import SolveParams, amg_iterate, vcycle
from .sparse import SparseMatrix

__all__ = [
    "CorrectionParams",
    "DenseSymPair",
    "EigenpairSet",
    "EigensolveResult",
    "Hierarchy",
    "ProblemSpec",
    "SetupParams",
    "SolveParams",
    "SparseMatrix",
    "TriMesh",
    "amg_eigensolve",
    "amg_iterate",
    "assemble_augmented",
    "assemble_problem",
    "build_hierarchy",
    "composite_transfer",
    "correction_step",
    "generalized_eig",
    "smoothed_basis",
    "structured_mesh",
    "vcycle",
]
