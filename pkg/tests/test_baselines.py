import numpy as np
import pytest

from conftest import random_dataset, random_frame
from mpca2 import (
    Covariance,
    MatrixDataset,
    MpcaConfig,
    ValidationError,
    free_parameter_count,
    glram_fit,
    objective,
    pca_fit,
    pca_reconstruct,
    population_covariance,
    population_mpca,
    population_twod2pca,
    projection_distance,
    random_spec,
    sample_covariance,
    total_variance,
    twod2pca_fit,
)
from mpca2.baselines import pca_retained_variance
from mpca2.glram import initial_frame


class TestPca:
    def test_rank_one(self, rng):
        v = random_frame(rng, 12, 1)
        X = np.stack([c * v.reshape(4, 3, order="F") for c in rng.standard_normal(10)])
        basis = pca_fit(MatrixDataset(X), 3)
        assert projection_distance(basis.loadings[:, :1], v) < 1e-10
        assert basis.eigenvalues[0] > 0
        assert np.allclose(basis.eigenvalues[1:], 0.0, atol=1e-12)

    def test_full_reconstructs_covariance(self, rng):
        d = random_dataset(rng, n=20, p=3, q=3)
        basis = pca_fit(d, 9)
        G = basis.loadings
        S = sample_covariance(d).entries
        assert np.linalg.norm(G @ np.diag(basis.eigenvalues) @ G.T - S) <= 1e-9

    def test_isotropic_spans(self, rng):
        d = MatrixDataset(rng.standard_normal((4000, 2, 2)))
        basis = pca_fit(d, 4)
        assert np.ptp(basis.eigenvalues) < 0.2
        assert projection_distance(basis.loadings, np.eye(4)) < 1e-10

    def test_gram_matches_covariance(self, rng):
        d = random_dataset(rng, n=15, p=5, q=4)
        g = pca_fit(d, 6, route="gram")
        c = pca_fit(d, 6, route="covariance")
        assert np.allclose(g.eigenvalues, c.eigenvalues, atol=1e-9)
        assert np.allclose(g.loadings, c.loadings, atol=1e-9)

    def test_gram_completion_beyond_rank(self, rng):
        d = random_dataset(rng, n=4, p=3, q=3)
        basis = pca_fit(d, 7)
        G = basis.loadings
        assert np.linalg.norm(G.T @ G - np.eye(7)) < 1e-10
        assert np.all(basis.eigenvalues[3:] == 0.0)
        assert pca_retained_variance(d, basis) == pytest.approx(total_variance(d), rel=1e-10)

    @pytest.mark.parametrize("k", [0, 13])
    def test_k_range(self, rng, k):
        with pytest.raises(ValidationError):
            pca_fit(random_dataset(rng), k)

    def test_reconstruct_lossless(self, rng):
        d = random_dataset(rng, n=5, p=3, q=2)
        assert np.allclose(pca_reconstruct(d, pca_fit(d, 6)).samples, d.samples, atol=1e-12)

    def test_rank_one_k1_lossless(self, rng):
        v = rng.standard_normal((3, 4))
        X = np.stack([c * v for c in rng.standard_normal(6)]) + 1.0
        d = MatrixDataset(X)
        assert np.allclose(pca_reconstruct(d, pca_fit(d, 1)).samples, X, atol=1e-12)

    def test_spectral_identity(self, rng):
        d = random_dataset(rng, n=30, p=4, q=3)
        basis = pca_fit(d, 5)
        err = np.sum((d.samples - pca_reconstruct(d, basis).samples) ** 2) / d.n
        assert err == pytest.approx(total_variance(d) - basis.eigenvalues.sum(), abs=1e-10)

    def test_dominates_mpca(self, rng):
        for _ in range(5):
            d = random_dataset(rng, n=12, p=5, q=4)
            mp = glram_fit(d, MpcaConfig(2, 2))
            assert pca_retained_variance(d, pca_fit(d, 4)) >= mp.value - 1e-12


class TestTwoD2Pca:
    def test_separable(self, rng):
        a0, b0 = random_frame(rng, 5, 1), random_frame(rng, 4, 1)
        X = np.stack([c * a0 @ b0.T for c in rng.standard_normal(7)])
        basis = twod2pca_fit(MatrixDataset(X), 1, 1)
        assert projection_distance(basis.Astar, a0) < 1e-10
        assert projection_distance(basis.Bstar, b0) < 1e-10

    def test_matches_glram_start(self, rng):
        d = random_dataset(rng, n=10, p=6, q=4)
        assert np.array_equal(twod2pca_fit(d, 3, 2).Astar, initial_frame(d, 3))

    def test_transpose_duality(self, rng):
        d = random_dataset(rng, n=10, p=6, q=4)
        a = twod2pca_fit(d, 3, 2)
        b = twod2pca_fit(d.transpose(), 2, 3)
        assert projection_distance(a.Astar, b.Bstar) < 1e-12
        assert projection_distance(a.Bstar, b.Astar) < 1e-12
        assert np.allclose(a.lam_star, b.xi_star)

    def test_eigenvalue_sums(self, rng):
        d = random_dataset(rng, n=10, p=6, q=4)
        basis = twod2pca_fit(d, 6, 4)
        tv = total_variance(d)
        assert basis.lam_star.sum() == pytest.approx(tv, rel=1e-12)
        assert basis.xi_star.sum() == pytest.approx(tv, rel=1e-12)

    def test_glram_not_worse(self, rng):
        d = random_dataset(rng, n=10, p=6, q=5)
        t = twod2pca_fit(d, 2, 2)
        assert glram_fit(d, MpcaConfig(2, 2)).value >= objective(d, t.Astar, t.Bstar) - 1e-12

    def test_dims(self, rng):
        with pytest.raises(ValidationError):
            twod2pca_fit(random_dataset(rng, p=4, q=3), 5, 1)


class TestPopulationTwoD2Pca:
    def test_isotropic(self):
        s2, p, q = 0.7, 4, 3
        basis = population_twod2pca(Covariance(s2 * np.eye(p * q), (p, q)), p, q)
        assert np.allclose(basis.lam_star, q * s2)
        assert np.allclose(basis.xi_star, p * s2)

    def test_matches_sample(self, rng):
        d = random_dataset(rng, n=8, p=5, q=3)
        pop = population_twod2pca(sample_covariance(d), 3, 2)
        smp = twod2pca_fit(d, 3, 2)
        assert np.allclose(pop.lam_star, smp.lam_star, atol=1e-10)
        assert np.allclose(pop.xi_star, smp.xi_star, atol=1e-10)
        assert projection_distance(pop.Astar, smp.Astar) < 1e-10

    @pytest.mark.parametrize("seed", range(4))
    def test_eigenvalue_shift(self, seed):
        spec = random_spec(6, 5, 3, 2, 0.4, seed)
        cov = population_covariance(spec)
        p, q = 6, 5
        full = population_twod2pca(cov, p, q)
        assert np.all(np.abs(np.diff(full.lam_star[:3])) >= 1e-6)
        for pdim, qdim in [(2, 2), (3, 3), (4, 2)]:
            basis = population_mpca(cov, MpcaConfig(pdim, qdim))
            assert np.allclose(full.lam_star[:pdim] - basis.lam, (q - qdim) * spec.sigma2, rtol=0, atol=1e-8)
            for i in range(min(3, pdim)):
                a, s = basis.A[:, i], full.Astar[:, i]
                assert min(np.linalg.norm(a - s), np.linalg.norm(a + s)) <= 1e-6
        for pdim, qdim in [(3, 1), (4, 2)]:
            basis = population_mpca(cov, MpcaConfig(pdim, qdim))
            assert np.allclose(full.xi_star[:qdim] - basis.xi, (p - pdim) * spec.sigma2, rtol=0, atol=1e-8)


class TestFreeParameters:
    @pytest.mark.parametrize(
        "kind,p,q,expected", [("pca", 64, 64, 4095), ("mpca", 64, 64, 126), ("mpca", 2, 2, 2), ("2d2pca", 3, 5, 6)]
    )
    def test_counts(self, kind, p, q, expected):
        assert free_parameter_count(kind, p, q) == expected

    def test_unknown(self):
        with pytest.raises(ValidationError):
            free_parameter_count("ica", 2, 2)
