"""Reference methods: PCA on vectorized samples and (2D)^2PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import _fix_signs, sym_eig
from .errors import ValidationError
from .linalg import (
    Covariance,
    MatrixDataset,
    col_scatter,
    mat_of,
    population_partial_col_scatter,
    population_partial_row_scatter,
    row_scatter,
    sample_covariance,
)

# Gram eigenvalues below this fraction of the largest are treated as zero.
GRAM_RANK_TOL = 1e-9


@dataclass(frozen=True)
class PcaBasis:
    """Orthonormal ``m x k`` loadings and their eigenvalues (descending)."""

    loadings: np.ndarray
    eigenvalues: np.ndarray

    @property
    def k(self):
        return self.loadings.shape[1]


@dataclass(frozen=True)
class TwoDPcaBasis:
    Astar: np.ndarray
    Bstar: np.ndarray
    lam_star: np.ndarray
    xi_star: np.ndarray

    # aliases so (2D)^2PCA bases work with glram.coordinates/reconstruct
    @property
    def A(self):
        return self.Astar

    @property
    def B(self):
        return self.Bstar

    @property
    def dims(self):
        return self.Astar.shape[1], self.Bstar.shape[1]


def _as_dataset(data):
    return data if isinstance(data, MatrixDataset) else MatrixDataset(data)


def _pca_gram(V, n, k):
    m = V.shape[1]
    G = V @ V.T / n
    eg = sym_eig(G)
    mu = eg.eigenvalues
    top = max(mu[0], 0.0)
    r = int(np.sum(mu > GRAM_RANK_TOL * top)) if top > 0 else 0
    r = min(r, k)
    L = V.T @ eg.eigenvectors[:, :r] / np.sqrt(n * mu[:r])
    # one QR pass removes the orthogonality loss from small eigenvalues
    Q, R = np.linalg.qr(L, mode="reduced" if k <= r else "complete")
    Q[:, :r] *= np.where(np.diag(R) < 0, -1.0, 1.0)
    loadings = Q[:, :k]
    values = np.concatenate([mu[:r], np.zeros(k - r)])
    return _fix_signs(loadings), values


def pca_fit(data, k, route="auto"):
    """Leading ``k`` principal axes of the vectorized samples.

    With fewer samples than variables (``route="auto"``) the eigenproblem
    is solved on the ``n x n`` Gram matrix and mapped back; axes beyond the
    data rank are filled with an orthonormal completion carrying eigenvalue
    zero.  ``route`` may force ``"gram"`` or ``"covariance"``.
    """
    data = _as_dataset(data)
    p, q = data.shape
    m = p * q
    k = int(k)
    if not 1 <= k <= m:
        raise ValidationError(f"k={k} outside [1, {m}]")
    if route not in ("auto", "gram", "covariance"):
        raise ValidationError(f"unknown route {route!r}")
    if route == "gram" or (route == "auto" and data.n < m):
        V = data.vectorized() - data.vectorized().mean(axis=0)
        loadings, values = _pca_gram(V, data.n, k)
    else:
        res = sym_eig(sample_covariance(data).entries, k)
        loadings, values = res.eigenvectors, res.eigenvalues
    return PcaBasis(loadings, values)


def pca_reconstruct(data, basis, mean=None):
    """``mean + mat(G G^T vec(X_i - mean))`` with ``G`` the loadings."""
    data = _as_dataset(data)
    p, q = data.shape
    G = np.asarray(basis.loadings)
    if G.shape[0] != p * q:
        raise ValidationError(f"loadings have {G.shape[0]} rows, samples have {p * q} entries")
    mean = data.mean if mean is None else np.asarray(mean, dtype=float)
    Xc = (data.samples - mean).transpose(0, 2, 1).reshape(data.n, p * q)
    R = (Xc @ G) @ G.T
    recon = np.stack([mat_of(r, (p, q)) for r in R])
    return MatrixDataset(mean + recon)


def pca_retained_variance(data, basis):
    data = _as_dataset(data)
    V = data.vectorized() - data.vectorized().mean(axis=0)
    W = V @ basis.loadings
    return float(np.sum(W * W) / data.n)


def _check_dims(shape, pdim, qdim):
    p, q = shape
    if not 1 <= pdim <= p:
        raise ValidationError(f"pdim={pdim} outside [1, {p}]")
    if not 1 <= qdim <= q:
        raise ValidationError(f"qdim={qdim} outside [1, {q}]")


def twod2pca_fit(data, pdim, qdim):
    """(2D)^2PCA: one eigen pass on each of the full row and column scatters."""
    data = _as_dataset(data)
    _check_dims(data.shape, pdim, qdim)
    ea = sym_eig(row_scatter(data), pdim)
    eb = sym_eig(col_scatter(data), qdim)
    return TwoDPcaBasis(ea.eigenvectors, eb.eigenvectors, ea.eigenvalues, eb.eigenvalues)


def population_twod2pca(cov, pdim, qdim):
    if not isinstance(cov, Covariance):
        raise ValidationError("population_twod2pca expects a Covariance")
    p, q = cov.shape
    _check_dims(cov.shape, pdim, qdim)
    ea = sym_eig(population_partial_row_scatter(cov, np.eye(q)), pdim)
    eb = sym_eig(population_partial_col_scatter(cov, np.eye(p)), qdim)
    return TwoDPcaBasis(ea.eigenvectors, eb.eigenvectors, ea.eigenvalues, eb.eigenvalues)


def free_parameter_count(kind, p, q):
    """Free parameters in one basis element of a ``p x q`` image.

    A PCA loading is a unit vector in ``R^{pq}``; an MPCA or (2D)^2PCA
    element ``b ⊗ a`` is a pair of unit vectors.
    """
    if p < 1 or q < 1:
        raise ValidationError("p and q must be positive")
    if kind == "pca":
        return p * q - 1
    if kind in ("mpca", "2d2pca"):
        return (p - 1) + (q - 1)
    raise ValidationError(f"unknown kind {kind!r}")
