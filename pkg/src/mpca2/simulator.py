"""Synthetic data from the model ``X = mu + A0 U B0^T + eps``.

Random streams
--------------
All draws use numpy's counter-based ``Philox`` bit generator with the user
seed as the literal key.  :func:`sample` fills samples in blocks of
``BLOCK`` rows; block ``b`` reads from ``Philox(key=seed).jumped(b)`` and
each sample consumes ``p0*q0`` normals for ``vec(U)`` followed by ``p*q``
normals for ``vec(eps)``.  A dataset of ``n`` samples is therefore a
prefix of any larger dataset drawn with the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import sym_eig
from .errors import ValidationError
from .linalg import Covariance, MatrixDataset, as_frame, kron

BLOCK = 1024


def philox(seed, block=0):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be in [0, 2**64), got {seed}")
    bitgen = np.random.Philox(key=seed)
    if block:
        bitgen = bitgen.jumped(block)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class ModelSpec:
    mu: np.ndarray
    A0: np.ndarray
    B0: np.ndarray
    T: np.ndarray
    sigma2: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        A0 = as_frame(self.A0, "A0")
        B0 = as_frame(self.B0, "B0")
        if mu.shape != (A0.shape[0], B0.shape[0]):
            raise ValidationError(f"mu has shape {mu.shape}, expected {(A0.shape[0], B0.shape[0])}")
        m0 = A0.shape[1] * B0.shape[1]
        T = np.array(self.T, dtype=float)
        if T.shape != (m0, m0):
            raise ValidationError(f"T must be {m0}x{m0}, got {T.shape}")
        if not np.allclose(T, T.T, rtol=0, atol=1e-12 * max(np.abs(T).max(), 1.0)):
            raise ValidationError("T is not symmetric")
        T = 0.5 * (T + T.T)
        if sym_eig(T).eigenvalues[-1] <= 0:
            raise ValidationError("T must be strictly positive definite")
        sigma2 = float(self.sigma2)
        # sigma2 == 0 is allowed for exact population work; sample() rejects it
        if not sigma2 >= 0 or not np.isfinite(sigma2):
            raise ValidationError(f"sigma2 must be >= 0, got {self.sigma2}")
        for name, value in (("mu", mu), ("A0", A0), ("B0", B0), ("T", T)):
            value = np.array(value)
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def shape(self):
        return self.mu.shape

    @property
    def true_dims(self):
        return self.A0.shape[1], self.B0.shape[1]


def _orthonormal(rng, rows, cols):
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def random_spec(p, q, p0, q0, sigma2, seed):
    """Generic model with Gaussian-drawn factors and ``T = G G^T + 0.1 I``."""
    if not (1 <= p0 <= p and 1 <= q0 <= q):
        raise ValidationError(f"need 1 <= p0 <= p and 1 <= q0 <= q, got {(p, q, p0, q0)}")
    rng = philox(seed)
    A0 = _orthonormal(rng, p, p0)
    B0 = _orthonormal(rng, q, q0)
    m0 = p0 * q0
    G = rng.standard_normal((m0, m0))
    T = G @ G.T + 0.1 * np.eye(m0)
    mu = rng.standard_normal((p, q))
    return ModelSpec(mu, A0, B0, T, sigma2)


def sample(spec, n, seed):
    """Draw ``n`` matrices from the model with Gaussian ``U`` and ``eps``."""
    n = int(n)
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")
    if spec.sigma2 <= 0:
        raise ValidationError("sampling needs sigma2 > 0")
    p, q = spec.shape
    p0, q0 = spec.true_dims
    m0, m = p0 * q0, p * q
    L = np.linalg.cholesky(spec.T)
    sd = np.sqrt(spec.sigma2)

    out = np.empty((n, p, q))
    for b, start in enumerate(range(0, n, BLOCK)):
        nb = min(BLOCK, n - start)
        z = philox(seed, b).standard_normal((nb, m0 + m))
        U = (z[:, :m0] @ L.T).reshape(nb, q0, p0).transpose(0, 2, 1)
        eps = sd * z[:, m0:].reshape(nb, q, p).transpose(0, 2, 1)
        out[start : start + nb] = spec.mu + spec.A0 @ U @ spec.B0.T + eps
    return MatrixDataset(out)


def population_covariance(spec):
    """Exact ``cov(vec X) = (B0 ⊗ A0) T (B0 ⊗ A0)^T + sigma2 I``."""
    G = kron(spec.B0, spec.A0)
    S = G @ spec.T @ G.T + spec.sigma2 * np.eye(G.shape[0])
    return Covariance(0.5 * (S + S.T), spec.shape)
