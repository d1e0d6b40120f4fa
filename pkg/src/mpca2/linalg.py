"""Dense building blocks for order-two tensor data.

Vectorization is column-major everywhere in this package, so that
``vec_of(A @ U @ B.T) == kron(B, A) @ vec_of(U)``.  The binary matrix
format in :mod:`mpca2.io` relies on the same ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

ORTHONORMAL_TOL = 1e-10
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


def vec_of(X):
    """Stack the columns of ``X`` into a 1-D array of length ``p*q``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError(f"expected a matrix, got array of shape {X.shape}")
    return X.reshape(-1, order="F")


def mat_of(v, shape):
    """Inverse of :func:`vec_of`."""
    v = np.asarray(v, dtype=float).ravel()
    p, q = shape
    if v.size != p * q:
        raise ValidationError(f"cannot reshape length {v.size} into {p}x{q}")
    return v.reshape((p, q), order="F")


def kron(B, A):
    """Kronecker product ``B ⊗ A`` (argument order follows the vec identity)."""
    return np.kron(np.asarray(B, dtype=float), np.asarray(A, dtype=float))


def as_frame(M, name="frame", tol=ORTHONORMAL_TOL):
    """Return ``M`` as a float matrix after checking ``M.T @ M = I``."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.shape[1] < 1:
        raise ValidationError(f"{name} must be a matrix with at least one column, got shape {M.shape}")
    if M.shape[1] > M.shape[0]:
        raise ValidationError(f"{name} has more columns than rows: {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    err = np.linalg.norm(M.T @ M - np.eye(M.shape[1]))
    if err > tol:
        raise ValidationError(f"{name} is not orthonormal (|M'M - I|_F = {err:.3g})")
    return M


@dataclass(frozen=True)
class MatrixDataset:
    """``n`` observations of a ``p x q`` matrix, stored as an ``(n, p, q)`` array."""

    samples: np.ndarray
    mean: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.array(self.samples, dtype=float)
        if X.ndim != 3:
            raise ValidationError(f"samples must have shape (n, p, q), got {X.shape}")
        if X.shape[0] < 2:
            raise ValidationError(f"need at least 2 samples, got {X.shape[0]}")
        if X.shape[1] < 1 or X.shape[2] < 1:
            raise ValidationError(f"degenerate sample shape {X.shape[1:]}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("samples contain non-finite values")
        X.setflags(write=False)
        mean = X.mean(axis=0)
        mean.setflags(write=False)
        object.__setattr__(self, "samples", X)
        object.__setattr__(self, "mean", mean)

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def shape(self):
        return self.samples.shape[1:]

    def centered(self):
        """Centered samples as a plain ``(n, p, q)`` array."""
        return self.samples - self.mean

    def vectorized(self):
        """``(n, p*q)`` array whose rows are the column-major vec of each sample."""
        n, p, q = self.samples.shape
        return self.samples.transpose(0, 2, 1).reshape(n, p * q)

    def transpose(self):
        """Dataset of transposed samples."""
        return MatrixDataset(self.samples.transpose(0, 2, 1))


def _dataset(data):
    if isinstance(data, MatrixDataset):
        return data
    return MatrixDataset(data)


@dataclass(frozen=True)
class Covariance:
    """Covariance of ``vec(X)`` for ``p x q`` matrices ``X``.

    ``entries`` is ``(pq, pq)``, indexed in column-major vec order.
    """

    entries: np.ndarray
    shape: tuple

    def __post_init__(self):
        S = np.array(self.entries, dtype=float)
        p, q = (int(s) for s in self.shape)
        m = p * q
        if S.shape != (m, m):
            raise ValidationError(f"covariance must be {m}x{m} for shape {(p, q)}, got {S.shape}")
        if not np.all(np.isfinite(S)):
            raise ValidationError("covariance has non-finite entries")
        scale = np.linalg.norm(S)
        if np.linalg.norm(S - S.T) > SYMMETRY_TOL * max(scale, 1.0):
            raise ValidationError("covariance is not symmetric")
        S = 0.5 * (S + S.T)
        S.setflags(write=False)
        object.__setattr__(self, "entries", S)
        object.__setattr__(self, "shape", (p, q))

    @property
    def m(self):
        return self.entries.shape[0]

    def check_psd(self):
        """Raise unless the smallest eigenvalue is >= -1e-10 times the largest."""
        from .eigen import sym_eig

        lam = sym_eig(self.entries, self.m).eigenvalues
        top = max(lam[0], 0.0)
        if lam[-1] < -PSD_TOL * top:
            raise ValidationError(f"covariance is not PSD (min eigenvalue {lam[-1]:.3g})")
        return self


def center(data):
    """Subtract the sample mean from every observation."""
    data = _dataset(data)
    return MatrixDataset(data.centered())


def sample_covariance(data):
    """``S_n = (1/n) sum_i vec(X_i - mean) vec(X_i - mean)^T``."""
    data = _dataset(data)
    V = center(data).vectorized()
    S = V.T @ V / data.n
    return Covariance(0.5 * (S + S.T), data.shape)


def _symmetrize(S):
    return 0.5 * (S + S.T)


def row_scatter(data):
    """Full row scatter ``(1/n) sum_i (X_i - mean)(X_i - mean)^T``."""
    data = _dataset(data)
    Xc = data.centered()
    return _symmetrize(np.einsum("nij,nkj->ik", Xc, Xc) / data.n)


def col_scatter(data):
    """Full column scatter ``(1/n) sum_i (X_i - mean)^T (X_i - mean)``."""
    data = _dataset(data)
    Xc = data.centered()
    return _symmetrize(np.einsum("nji,njk->ik", Xc, Xc) / data.n)


def partial_row_scatter(data, B):
    """Row scatter after projecting every centered sample's rows onto ``span(B)``.

    Returns the ``p x p`` matrix ``(1/n) sum_i (X_i - mean) B B^T (X_i - mean)^T``.
    """
    data = _dataset(data)
    B = as_frame(B, "B")
    if B.shape[0] != data.shape[1]:
        raise ValidationError(f"B has {B.shape[0]} rows, samples have {data.shape[1]} columns")
    Y = data.centered() @ B
    return _symmetrize(np.einsum("nik,njk->ij", Y, Y) / data.n)


def partial_col_scatter(data, A):
    """``(1/n) sum_i (X_i - mean)^T A A^T (X_i - mean)``, a ``q x q`` matrix."""
    data = _dataset(data)
    A = as_frame(A, "A")
    if A.shape[0] != data.shape[0]:
        raise ValidationError(f"A has {A.shape[0]} rows, samples have {data.shape[0]} rows")
    Y = A.T @ data.centered()
    return _symmetrize(np.einsum("nki,nkj->ij", Y, Y) / data.n)


def _covariance(cov):
    if not isinstance(cov, Covariance):
        raise ValidationError("expected a Covariance (entries plus (p, q) shape)")
    return cov


def population_partial_row_scatter(cov, B):
    """``sum_j (b_j ⊗ I_p)^T Sigma (b_j ⊗ I_p)`` over the columns ``b_j`` of ``B``."""
    cov = _covariance(cov)
    p, q = cov.shape
    B = as_frame(B, "B")
    if B.shape[0] != q:
        raise ValidationError(f"B has {B.shape[0]} rows, expected q={q}")
    Ip = np.eye(p)
    out = np.zeros((p, p))
    for j in range(B.shape[1]):
        K = kron(B[:, j : j + 1], Ip)
        out += K.T @ cov.entries @ K
    return _symmetrize(out)


def population_partial_col_scatter(cov, A):
    """``sum_i (I_q ⊗ a_i)^T Sigma (I_q ⊗ a_i)`` over the columns ``a_i`` of ``A``."""
    cov = _covariance(cov)
    p, q = cov.shape
    A = as_frame(A, "A")
    if A.shape[0] != p:
        raise ValidationError(f"A has {A.shape[0]} rows, expected p={p}")
    Iq = np.eye(q)
    out = np.zeros((q, q))
    for i in range(A.shape[1]):
        K = kron(Iq, A[:, i : i + 1])
        out += K.T @ cov.entries @ K
    return _symmetrize(out)


def projection_distance(M1, M2):
    """Frobenius distance between the orthogonal projectors onto two spans."""
    M1 = as_frame(M1, "M1")
    M2 = as_frame(M2, "M2")
    if M1.shape[0] != M2.shape[0]:
        raise ValidationError(f"ambient dimensions differ: {M1.shape[0]} vs {M2.shape[0]}")
    return float(np.linalg.norm(M1 @ M1.T - M2 @ M2.T))


def containment_residual(Msub, Msup):
    """``|(I - Msup Msup^T) Msub|_F``; zero iff ``span(Msub)`` lies in ``span(Msup)``."""
    Msub = as_frame(Msub, "Msub")
    Msup = as_frame(Msup, "Msup")
    if Msub.shape[0] != Msup.shape[0]:
        raise ValidationError(f"ambient dimensions differ: {Msub.shape[0]} vs {Msup.shape[0]}")
    return float(np.linalg.norm(Msub - Msup @ (Msup.T @ Msub)))


def span_contained(Msub, Msup, tol=1e-10):
    return containment_residual(Msub, Msup) <= tol
