"""Acceptance gate: one test per criterion, each reported as a PASS/FAIL line
in the terminal summary (see ``conftest.py``)."""
import time

import numpy as np
import pytest
import scipy.linalg as sla

from amgeig.correction import CorrectionParams, correction_step
from amgeig.dense_eig import DenseSymPair, EigenpairSet, generalized_eig
from amgeig.experiment import ExperimentConfig, direct_oracle, read_error_csv, run_experiment
from amgeig.fem import ProblemSpec, assemble_problem, structured_mesh
from amgeig.hierarchy import SetupParams, build_hierarchy, composite_transfer
from amgeig.solve import SolveParams, vcycle
from amgeig.sparse import SparseMatrix, spmv

from helpers import (
    char_poly_3x3,
    coarsening_violations,
    cubic_real_roots,
    galerkin_errors,
    random_pair,
    random_spd,
    tridiag,
)

EXACT_FACTORS = np.array([2, 5, 5, 8, 10, 10, 13, 13, 17, 17, 18, 20, 20], dtype=float)
FLOOR = 1e-12
RATIO_BOUND = 0.7


@pytest.fixture
def criterion(record_property):
    def start(label):
        record_property("criterion", label)

        def detail(text):
            record_property("detail", text)

        return detail

    return start


def oracle_rel_err(n):
    A, M, _ = assemble_problem(structured_mesh(n), ProblemSpec())
    vals = direct_oracle(A, M, 13).values
    exact = EXACT_FACTORS * np.pi**2
    return (vals - exact) / exact


def test_criterion_1_spectrum_anchor(criterion):
    detail = criterion("1 spectrum anchor, n=64 within 2%, 32->64 error shrink in [3.5, 4.5]")
    t0 = time.perf_counter()
    e64 = oracle_rel_err(64)
    elapsed = time.perf_counter() - t0
    e32 = oracle_rel_err(32)
    shrink = e32 / e64
    detail(f"max rel err {np.abs(e64).max():.4f}, shrink {shrink.min():.2f}..{shrink.max():.2f}, "
           f"oracle {elapsed:.1f}s")
    assert np.all(e64 >= 0)  # conforming discretization bounds from above
    assert np.abs(e64).max() <= 0.02
    assert np.all((shrink >= 3.5) & (shrink <= 4.5))
    assert elapsed <= 300


def sweep_ratios(path):
    """Per-sweep ratios e_j(P+1)/e_j(P) for every pair with e_j(P) above the floor."""
    table = read_error_csv(path)
    ratios = []
    for P in sorted(table)[:-1]:
        cur, nxt = table[P], table[P + 1]
        live = cur > FLOOR
        ratios.append(nxt[live] / cur[live])
    return np.concatenate(ratios) if ratios else np.array([])


def convergence_run(tmp_path, n, kind="laplace", max_coarse=50, P=5):
    cfg = ExperimentConfig(
        problem=ProblemSpec(kind=kind), structured=n, q=13, theta=0.25, m=2, smooth=2,
        P=list(range(1, P + 1)), max_coarse_dim=max_coarse,
        out=str(tmp_path / f"{kind}_{n}_{max_coarse}.csv"),
    )
    t0 = time.perf_counter()
    meta = run_experiment(cfg)
    return meta, sweep_ratios(cfg.out), time.perf_counter() - t0


def geometric_rate(ratios):
    return float(np.exp(np.mean(np.log(np.maximum(ratios, 1e-300)))))


@pytest.mark.parametrize("max_coarse", [50, 500])
def test_criterion_2_algebraic_convergence(tmp_path, criterion, max_coarse):
    detail = criterion(f"2 laplace n=32 convergence, ratios <= {RATIO_BOUND} (max_coarse={max_coarse})")
    meta, ratios, elapsed = convergence_run(tmp_path, 32, max_coarse=max_coarse)
    worst = ratios.max() if len(ratios) else 0.0
    detail(f"{meta['caption']}; {len(ratios)} live ratios, max {worst:.3g}; {elapsed:.1f}s")
    assert worst <= RATIO_BOUND
    assert elapsed <= 120


def test_criterion_3_uniform_rate(tmp_path, criterion):
    detail = criterion("3 uniform rate, geometric-mean rate n=16 vs n=32 within a factor 2")
    rates = {}
    for n in (16, 32):
        _, ratios, _ = convergence_run(tmp_path, n)
        rates[n] = geometric_rate(ratios)
    factor = max(rates.values()) / min(rates.values())
    detail(f"rate n=16 {rates[16]:.4f}, n=32 {rates[32]:.4f}, factor {factor:.2f}")
    assert factor <= 2.0
    assert max(rates.values()) < 1.0


@pytest.mark.parametrize("max_coarse", [50, 500])
def test_criterion_4_coulomb(tmp_path, criterion, max_coarse):
    detail = criterion(f"4 coulomb n=32 convergence, ratios <= {RATIO_BOUND} (max_coarse={max_coarse})")
    meta, ratios, elapsed = convergence_run(tmp_path, 32, kind="coulomb", max_coarse=max_coarse)
    worst = ratios.max() if len(ratios) else 0.0
    detail(f"{meta['caption']}; {len(ratios)} live ratios, max {worst:.3g}; {elapsed:.1f}s")
    assert worst <= RATIO_BOUND


def test_criterion_5_coarsening_invariants(criterion, poisson_pairs):
    detail = criterion("5 coarsening invariants on structured and random hierarchies")
    rng = np.random.default_rng(2024)
    hierarchies = []
    for n in (8, 16, 32, 64):
        for kind in ("laplace", "coulomb"):
            A, M = poisson_pairs(n, kind)
            hierarchies.append(build_hierarchy(A, M, SetupParams(max_coarse_dim=20)))
    for theta in (0.1, 0.25, 0.5, 0.9):
        A, M = poisson_pairs(16)
        hierarchies.append(build_hierarchy(A, M, SetupParams(theta=theta, max_coarse_dim=10)))
    for _ in range(40):
        A, M = random_pair(rng, int(rng.integers(5, 150)), density=float(rng.uniform(0.02, 0.3)))
        hierarchies.append(build_hierarchy(A, M, SetupParams(max_coarse_dim=3)))
    problems = [p for h in hierarchies for p in coarsening_violations(h)]
    levels = sum(len(h.prolongations) for h in hierarchies)
    detail(f"{len(hierarchies)} hierarchies, {levels} coarsening steps, {len(problems)} violations")
    assert not problems, problems[:5]


def test_criterion_6_galerkin_and_sandwich(criterion, poisson_pairs):
    detail = criterion("6 Galerkin pairs to 1e-12, Rayleigh-Ritz sandwich on 10 two-level instances")
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(20):
        A, M = random_pair(rng, int(rng.integers(10, 201)))
        worst = max(worst, *galerkin_errors(build_hierarchy(A, M, SetupParams(max_coarse_dim=3))))
    for n in (8, 12, 14):
        A, M = poisson_pairs(n)
        worst = max(worst, *galerkin_errors(build_hierarchy(A, M, SetupParams(max_coarse_dim=5))))

    checked, sandwich_gap = 0, 0.0
    while checked < 10:
        A, M = random_pair(rng, int(rng.integers(8, 41)))
        h = build_hierarchy(A, M, SetupParams(max_coarse_dim=1, max_levels=2))
        if h.num_levels != 2:
            continue
        q = min(3, h.dims[1])
        fine = sla.eigh(A.to_dense(), M.to_dense(), eigvals_only=True, subset_by_index=(0, q - 1))
        coarse = generalized_eig(DenseSymPair(h.A[1].to_dense(), h.M[1].to_dense()), q)
        U = spmv(composite_transfer(h, 0, 1), coarse.vectors)
        U /= np.sqrt(np.einsum("ij,ij->j", U, spmv(M, U)))
        # perturb so the smoothed block is not already in the coarse range
        U += 1e-2 * rng.standard_normal(U.shape)
        out = correction_step(h, 0, EigenpairSet(coarse.values, U), CorrectionParams(q=q, m=1))
        tol = 1e-10 * fine
        sandwich_gap = max(sandwich_gap, (fine - out.values).max(), (out.values - coarse.values).max())
        assert np.all(fine <= out.values + tol)
        assert np.all(out.values <= coarse.values + tol)
        checked += 1
    detail(f"max Galerkin rel err {worst:.2e}; sandwich checked on {checked} instances, "
           f"largest violation {max(sandwich_gap, 0.0):.1e}")
    assert worst <= 1e-12


def test_criterion_7_oracle_equivalence(criterion):
    detail = criterion("7 dense eigensolver vs characteristic polynomial (1e-8), correction fixed point (1e-9)")
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        A, M = random_spd(rng, 3), random_spd(rng, 3)
        ref = cubic_real_roots(char_poly_3x3(A, M))
        got = generalized_eig(DenseSymPair(A, M), 3).values
        worst = max(worst, float(np.max(np.abs(got - ref) / np.abs(ref))))

    Mc = SparseMatrix.from_dense((4 * np.eye(5) + np.eye(5, k=1) + np.eye(5, k=-1)) / 6)
    h = build_hierarchy(tridiag(5), Mc, SetupParams(max_coarse_dim=1, max_levels=2))
    w, X = sla.eigh(h.A[0].to_dense(), Mc.to_dense(), subset_by_index=(0, 1))
    out = correction_step(h, 0, EigenpairSet(w, X), CorrectionParams(q=2, m=2))
    drift = float(np.max(np.abs(out.values - w) / w))
    detail(f"char-poly max rel diff {worst:.1e}; fixed-point drift {drift:.1e} (levels {h.dims})")
    assert worst <= 1e-8
    assert drift <= 1e-9


def test_criterion_8_vcycle(criterion, poisson_pairs):
    detail = criterion("8 V-cycle residual reduction <= 0.6 averaged over 10 cycles, n=64")
    A, M = poisson_pairs(64)
    h = build_hierarchy(A, M)
    rng = np.random.default_rng(5)
    b = rng.standard_normal(A.nrows)
    x = np.zeros_like(b)
    res = [np.linalg.norm(b)]
    for _ in range(10):
        x = vcycle(h, 0, b, x, SolveParams())
        res.append(np.linalg.norm(b - spmv(A, x)))
    factor = (res[-1] / res[0]) ** 0.1
    detail(f"levels {h.dims}; mean reduction factor {factor:.3f}")
    assert factor <= 0.6
