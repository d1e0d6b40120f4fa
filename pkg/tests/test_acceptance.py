"""Exit criteria.  Each test logs one PASS/FAIL line, shown in the pytest summary."""

import math
import time

import numpy as np
import pytest

from conftest import random_frame
from mpca2 import (
    MatrixDataset,
    MpcaConfig,
    coordinates,
    free_parameter_count,
    glram_fit,
    kron,
    objective,
    pca_fit,
    pca_reconstruct,
    population_covariance,
    population_mpca,
    population_twod2pca,
    projection_distance,
    random_spec,
    reconstruct,
    sample,
    sym_eig,
    total_variance,
    vec_of,
)
from mpca2.glram import objective_vectorized
from mpca2.linalg import containment_residual
from test_glram import GRID_DATA, grid_search


@pytest.fixture
def criterion(acceptance_log):
    """Time a criterion body and log its outcome."""
    state = {}

    def run(number, name, budget, body):
        t0 = time.perf_counter()
        ok, detail = False, ""
        try:
            detail = body()
            ok = True
        finally:
            elapsed = time.perf_counter() - t0
            ok = ok and elapsed < budget
            acceptance_log.append(
                f"{'PASS' if ok else 'FAIL'}  {number:>2}. {name:<38} {elapsed:7.2f}s (< {budget:g}s)  {detail or ''}"
            )
        assert elapsed < budget, f"criterion {number} took {elapsed:.2f}s, budget {budget}s"

    state["run"] = run
    return run


def test_01_kronecker_identity(criterion):
    def body():
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(200):
            p, q, r, s = rng.integers(1, 7, size=4)
            A = rng.standard_normal((p, r))
            U = rng.standard_normal((r, s))
            B = rng.standard_normal((q, s))
            worst = max(worst, np.abs(vec_of(A @ U @ B.T) - kron(B, A) @ vec_of(U)).max())
        assert worst <= 1e-12
        return f"max err {worst:.2e}"

    criterion(1, "Kronecker vec identity", 1.0, body)


def test_02_objective_dual_form(criterion):
    def body():
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(50):
            n, p, q = rng.integers(2, 10), rng.integers(1, 8), rng.integers(1, 8)
            d = MatrixDataset(rng.standard_normal((n, p, q)))
            A = random_frame(rng, p, int(rng.integers(1, p + 1)))
            B = random_frame(rng, q, int(rng.integers(1, q + 1)))
            worst = max(worst, abs(objective(d, A, B) - objective_vectorized(d, A, B)))
        assert worst <= 1e-12
        return f"max err {worst:.2e}"

    criterion(2, "objective matrix vs vec form", 5.0, body)


def test_03_glram_monotone_bounded(criterion):
    def body():
        rng = np.random.default_rng(3)
        worst_drop = 0.0
        for i in range(100):
            n, p, q = int(rng.integers(2, 30)), int(rng.integers(1, 13)), int(rng.integers(1, 13))
            d = MatrixDataset(rng.standard_normal((n, p, q)) * rng.uniform(0.1, 10))
            cfg = MpcaConfig(int(rng.integers(1, p + 1)), int(rng.integers(1, q + 1)), seed=i)
            basis = glram_fit(d, cfg)
            tv = total_variance(d)
            trace = np.array(basis.objective_trace)
            drop = -np.min(np.diff(trace), initial=0.0) / tv
            worst_drop = max(worst_drop, drop)
            assert np.all(np.diff(trace) >= -1e-12 * tv)
            # full-rank fits equal the total variance exactly, up to rounding
            assert trace[-1] <= tv * (1 + 1e-12)
        return f"worst relative drop {worst_drop:.1e}"

    criterion(3, "GLRAM monotone and bounded", 30.0, body)


def test_04_coordinate_optimality(criterion):
    def body():
        rng = np.random.default_rng(4)
        d = MatrixDataset(rng.standard_normal((10, 7, 6)))
        basis = glram_fit(d, MpcaConfig(3, 2))
        assert basis.converged
        U = coordinates(d, basis)
        Xc = d.centered()
        A, B = basis.A, basis.B
        loss = lambda i, V: np.sum((Xc[i] - A @ V @ B.T) ** 2)
        for i in range(d.n):
            base = loss(i, U[i])
            for _ in range(100):
                scale = 10.0 ** rng.uniform(-6, 0)
                assert loss(i, U[i] + scale * rng.standard_normal(U[i].shape)) >= base
        return f"{d.n * 100} perturbations"

    criterion(4, "coordinate optimality (perturbation)", 10.0, body)


def test_05_brute_force_grid(criterion):
    def body():
        best = grid_search(GRID_DATA)
        value = glram_fit(MatrixDataset(GRID_DATA), MpcaConfig(1, 1)).value
        rel = abs(value - best) / best
        assert rel <= 1e-3
        return f"glram {value:.6f} grid {best:.6f} rel {rel:.1e}"

    criterion(5, "2x2 brute-force grid oracle", 10.0, body)


def test_06_nesting_regimes(criterion):
    def body():
        worst = 0.0
        regimes = {"a": (4, 3), "b": (2, 3), "c": (4, 1), "d": (2, 1)}
        for seed in range(10):
            spec = random_spec(6, 5, 3, 2, 0.5, seed)
            cov = population_covariance(spec)
            for name, (pd, qd) in regimes.items():
                basis = population_mpca(cov, MpcaConfig(pd, qd))
                ra = containment_residual(spec.A0, basis.A) if pd >= 3 else containment_residual(basis.A, spec.A0)
                rb = containment_residual(spec.B0, basis.B) if qd >= 2 else containment_residual(basis.B, spec.B0)
                worst = max(worst, ra, rb)
                assert ra <= 1e-6 and rb <= 1e-6, (seed, name, ra, rb)
        return f"max residual {worst:.1e}"

    criterion(6, "population nesting, 4 regimes", 30.0, body)


def test_07_twod2pca_shift(criterion):
    def body():
        p, q, p0, q0, s2 = 6, 5, 3, 2, 0.5
        used, seed = 0, 0
        worst_shift = worst_vec = 0.0
        while used < 10:
            spec = random_spec(p, q, p0, q0, s2, seed)
            seed += 1
            cov = population_covariance(spec)
            full = population_twod2pca(cov, p, q)
            if np.any(np.abs(np.diff(full.lam_star[: p0 + 1])) < 1e-6) or np.any(
                np.abs(np.diff(full.xi_star[: q0 + 1])) < 1e-6
            ):
                continue
            used += 1
            for pd in range(1, p + 1):
                for qd in range(q0, q + 1):
                    basis = population_mpca(cov, MpcaConfig(pd, qd))
                    shift = np.abs(full.lam_star[:pd] - basis.lam - (q - qd) * s2).max()
                    vec = max(
                        min(np.linalg.norm(basis.A[:, i] - full.Astar[:, i]), np.linalg.norm(basis.A[:, i] + full.Astar[:, i]))
                        for i in range(min(p0, pd))
                    )
                    worst_shift, worst_vec = max(worst_shift, shift), max(worst_vec, vec)
            for pd in range(p0, p + 1):
                for qd in range(1, q + 1):
                    basis = population_mpca(cov, MpcaConfig(pd, qd))
                    shift = np.abs(full.xi_star[:qd] - basis.xi - (p - pd) * s2).max()
                    vec = max(
                        min(np.linalg.norm(basis.B[:, j] - full.Bstar[:, j]), np.linalg.norm(basis.B[:, j] + full.Bstar[:, j]))
                        for j in range(min(q0, qd))
                    )
                    worst_shift, worst_vec = max(worst_shift, shift), max(worst_vec, vec)
        assert worst_shift <= 1e-8 and worst_vec <= 1e-6
        return f"shift err {worst_shift:.1e}, eigvec err {worst_vec:.1e}"

    criterion(7, "(2D)^2PCA eigenvalue shift", 30.0, body)


def test_08_free_parameters(criterion):
    def body():
        pca, mpca = free_parameter_count("pca", 64, 64), free_parameter_count("mpca", 64, 64)
        assert pca == 4095 and mpca == 126
        assert isinstance(pca, int) and isinstance(mpca, int)
        return f"pca {pca}, mpca {mpca}"

    criterion(8, "free-parameter counts 64x64", 1.0, body)


def test_09_sample_consistency(criterion):
    def body():
        spec = random_spec(6, 5, 3, 2, 0.5, 0)
        pop = population_mpca(population_covariance(spec), MpcaConfig(3, 2))
        target = kron(pop.B, pop.A)
        medians = {}
        for n in (100, 10_000):
            dist = [
                projection_distance(kron(b.B, b.A), target)
                for b in (glram_fit(sample(spec, n, seed), MpcaConfig(3, 2)) for seed in range(20))
            ]
            medians[n] = float(np.median(dist))
        assert medians[10_000] < medians[100]
        return f"median dist n=100 {medians[100]:.3f}, n=10000 {medians[10_000]:.4f}"

    criterion(9, "sample spans -> population spans", 120.0, body)


def test_10_small_sample_advantage(criterion):
    def body():
        spec = random_spec(16, 16, 3, 3, 0.1, 0)
        wins = 0
        for seed in range(20):
            train = sample(spec, 30, 2 * seed)
            test = sample(spec, 200, 2 * seed + 1)
            mp = glram_fit(train, MpcaConfig(3, 3))
            pc = pca_fit(train, 9)
            err_mp = np.sum((test.samples - reconstruct(test, mp, mean=train.mean).samples) ** 2) / test.n
            err_pc = np.sum((test.samples - pca_reconstruct(test, pc, mean=train.mean).samples) ** 2) / test.n
            wins += err_mp < err_pc
        assert wins >= 15
        return f"MPCA better in {wins}/20 seeds"

    criterion(10, "small-sample MPCA vs PCA", 120.0, body)


def test_11_eigensolver(criterion):
    def body():
        rng = np.random.default_rng(11)
        worst_res = worst_tr = 0.0
        for _ in range(100):
            d = int(rng.integers(1, 101))
            X = rng.standard_normal((d, d)) * 10.0 ** rng.uniform(-3, 3)
            S = X + X.T
            res = sym_eig(S)
            V, lam = res.eigenvectors, res.eigenvalues
            r = np.linalg.norm(S - V @ np.diag(lam) @ V.T) / (1 + np.linalg.norm(S))
            t = abs(lam.sum() - np.trace(S)) / (1 + abs(np.trace(S)))
            worst_res, worst_tr = max(worst_res, r), max(worst_tr, t)
        assert worst_res <= 1e-10 and worst_tr <= 1e-10
        return f"residual {worst_res:.1e}, trace {worst_tr:.1e}"

    criterion(11, "Jacobi eigensolver accuracy", 30.0, body)
