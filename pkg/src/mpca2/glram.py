"""Multilinear PCA of matrix data via GLRAM alternating eigen-iterations.

For a target dimensionality ``(pdim, qdim)`` the fit looks for orthonormal
``A`` (``p x pdim``) and ``B`` (``q x qdim``) maximizing

    f(A, B) = (1/n) sum_i |A^T (X_i - mean) B|_F^2,

equivalently ``tr{(B ⊗ A)^T S (B ⊗ A)}`` with ``S`` the covariance of
``vec(X)``.  Each half-step solves a small symmetric eigenproblem, so
``f`` never decreases along the iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .eigen import sym_eig
from .errors import ValidationError
from .linalg import (
    Covariance,
    MatrixDataset,
    as_frame,
    kron,
    partial_col_scatter,
    partial_row_scatter,
    population_partial_col_scatter,
    population_partial_row_scatter,
    row_scatter,
)

log = logging.getLogger(__name__)

INIT_STRATEGIES = ("row-scatter", "random", "user")


@dataclass(frozen=True)
class MpcaConfig:
    """Settings for :func:`glram_fit` and :func:`population_mpca`.

    ``restarts`` counts fits in total: the first starts from ``init`` and the
    rest from random orthonormal ``A`` drawn from ``seed``.

    A fit stops once the relative objective change ``|f_k - f_{k-1}| /
    (1 + f_{k-1})`` drops below ``tol`` and, unless ``stat_tol`` is None,
    ``B`` is also an invariant subspace of the column scatter built from the
    current ``A``: ``|(I - B B^T) S B|_F <= stat_tol * |S|_F``.  ``A`` is an
    exact eigenbasis for ``B`` after every step, so this certifies a fixed
    point even when eigenvalues are tied.
    """

    pdim: int
    qdim: int
    tol: float = 1e-10
    stat_tol: float | None = 1e-10
    max_iter: int = 500
    init: str = "row-scatter"
    restarts: int = 5
    seed: int = 0
    A0: np.ndarray | None = field(default=None, repr=False, compare=False)

    def validate(self, shape):
        p, q = shape
        if not 1 <= self.pdim <= p:
            raise ValidationError(f"pdim={self.pdim} outside [1, {p}]")
        if not 1 <= self.qdim <= q:
            raise ValidationError(f"qdim={self.qdim} outside [1, {q}]")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.stat_tol is not None and not self.stat_tol > 0:
            raise ValidationError("stat_tol must be positive or None")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.init not in INIT_STRATEGIES:
            raise ValidationError(f"unknown init {self.init!r}; expected one of {INIT_STRATEGIES}")
        if self.init == "user":
            if self.A0 is None:
                raise ValidationError("init='user' needs A0")
            A0 = as_frame(self.A0, "A0")
            if A0.shape != (p, self.pdim):
                raise ValidationError(f"A0 must be {p}x{self.pdim}, got {A0.shape}")
        return self

    def to_dict(self):
        return {
            "pdim": self.pdim,
            "qdim": self.qdim,
            "tol": self.tol,
            "stat_tol": self.stat_tol,
            "max_iter": self.max_iter,
            "init": self.init,
            "restarts": self.restarts,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MpcaBasis:
    A: np.ndarray
    B: np.ndarray
    lam: np.ndarray
    xi: np.ndarray
    objective_trace: list
    converged: bool
    restart_objectives: list = field(default_factory=list)
    best_restart: int = 0

    @property
    def shape(self):
        return self.A.shape[0], self.B.shape[0]

    @property
    def dims(self):
        return self.A.shape[1], self.B.shape[1]

    @property
    def iterations(self):
        return len(self.objective_trace)

    @property
    def value(self):
        return self.objective_trace[-1]


def random_frame(rng, rows, cols):
    """Orthonormal ``rows x cols`` frame from a QR of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def initial_frame(data, pdim):
    """Leading ``pdim`` eigenvectors of the full row scatter (default start)."""
    return sym_eig(row_scatter(data), pdim).eigenvectors


def _stationarity(S, B):
    R = S @ B
    R -= B @ (B.T @ R)
    scale = np.linalg.norm(S)
    return float(np.linalg.norm(R) / scale) if scale > 0 else 0.0


def _alternate(row_scatter_of, col_scatter_of, value, A, cfg):
    """Run B-step / A-step pairs from ``A`` until the objective settles."""
    trace = []
    converged = False
    S_col = col_scatter_of(A)
    for _ in range(cfg.max_iter):
        eb = sym_eig(S_col, cfg.qdim)
        B = eb.eigenvectors
        ea = sym_eig(row_scatter_of(B), cfg.pdim)
        A = ea.eigenvectors
        f = value(A, B)
        S_col = col_scatter_of(A)
        if trace and abs(f - trace[-1]) / (1.0 + abs(trace[-1])) < cfg.tol:
            converged = cfg.stat_tol is None or _stationarity(S_col, B) <= cfg.stat_tol
        trace.append(f)
        if converged:
            break
    return A, B, ea.eigenvalues, eb.eigenvalues, trace, converged


def _run(row_scatter_of, col_scatter_of, value, shape, cfg, start):
    p, q = shape
    cfg.validate(shape)
    rng = np.random.default_rng(cfg.seed)
    if cfg.init == "user":
        first = as_frame(cfg.A0, "A0")
    elif cfg.init == "random":
        first = random_frame(rng, p, cfg.pdim)
    else:
        first = start()

    best = None
    finals = []
    for r in range(cfg.restarts):
        A0 = first if r == 0 else random_frame(rng, p, cfg.pdim)
        A, B, lam, xi, trace, converged = _alternate(row_scatter_of, col_scatter_of, value, A0, cfg)
        finals.append(trace[-1])
        log.debug("restart %d: objective %.12g after %d iterations", r, trace[-1], len(trace))
        # strict > keeps the lowest index on ties
        if best is None or trace[-1] > best[4][-1]:
            best = (A, B, lam, xi, trace, converged, r)
    A, B, lam, xi, trace, converged, r = best
    return MpcaBasis(A, B, lam, xi, trace, converged, finals, r)


def glram_fit(data, cfg):
    """Fit an MPCA basis to a dataset by GLRAM.

    Parameters
    ----------
    data : MatrixDataset
    cfg : MpcaConfig

    Returns
    -------
    MpcaBasis
        Best restart by final objective.  ``lam`` and ``xi`` are the
        eigenvalues from the last A-step and B-step.
    """
    if not isinstance(data, MatrixDataset):
        data = MatrixDataset(data)
    return _run(
        lambda B: partial_row_scatter(data, B),
        lambda A: partial_col_scatter(data, A),
        lambda A, B: objective(data, A, B),
        data.shape,
        cfg,
        lambda: initial_frame(data, cfg.pdim),
    )


def population_objective(cov, A, B):
    """``tr{(B ⊗ A)^T Sigma (B ⊗ A)}``."""
    G = kron(B, A)
    return float(np.trace(G.T @ cov.entries @ G))


def population_mpca(cov, cfg):
    """Population MPCA: the same alternation driven by a covariance of ``vec(X)``."""
    if not isinstance(cov, Covariance):
        raise ValidationError("population_mpca expects a Covariance")
    cov.check_psd()
    p, q = cov.shape
    full_row = lambda: sym_eig(population_partial_row_scatter(cov, np.eye(q)), cfg.pdim).eigenvectors
    return _run(
        lambda B: population_partial_row_scatter(cov, B),
        lambda A: population_partial_col_scatter(cov, A),
        lambda A, B: population_objective(cov, A, B),
        cov.shape,
        cfg,
        full_row,
    )


def _check_basis(data, A, B):
    p, q = data.shape
    A = as_frame(A, "A")
    B = as_frame(B, "B")
    if A.shape[0] != p or B.shape[0] != q:
        raise ValidationError(f"basis shapes {A.shape}, {B.shape} do not fit {p}x{q} samples")
    return A, B


def objective(data, A, B):
    """Retained variance ``(1/n) sum_i |A^T (X_i - mean) B|_F^2``."""
    if not isinstance(data, MatrixDataset):
        data = MatrixDataset(data)
    A, B = _check_basis(data, A, B)
    U = A.T @ data.centered() @ B
    return float(np.sum(U * U) / data.n)


def objective_vectorized(data, A, B):
    """Same quantity as :func:`objective`, via ``(B ⊗ A)^T vec(X_i - mean)``."""
    if not isinstance(data, MatrixDataset):
        data = MatrixDataset(data)
    A, B = _check_basis(data, A, B)
    V = data.vectorized() - data.vectorized().mean(axis=0)
    W = V @ kron(B, A)
    return float(np.sum(W * W) / data.n)


def total_variance(data):
    """``(1/n) sum_i |X_i - mean|_F^2``."""
    if not isinstance(data, MatrixDataset):
        data = MatrixDataset(data)
    Xc = data.centered()
    return float(np.sum(Xc * Xc) / data.n)


def _frames(basis):
    return basis.A, basis.B


def coordinates(data, basis, mean=None):
    """Core matrices ``U_i = A^T (X_i - mean) B`` as an ``(n, pdim, qdim)`` array.

    ``mean`` defaults to the dataset's own mean; pass a training mean to
    project held-out data.
    """
    if not isinstance(data, MatrixDataset):
        data = MatrixDataset(data)
    A, B = _check_basis(data, *_frames(basis))
    mean = data.mean if mean is None else np.asarray(mean, dtype=float)
    return A.T @ (data.samples - mean) @ B


def reconstruct(data, basis, mean=None):
    """``mean + A A^T (X_i - mean) B B^T`` for every sample."""
    if not isinstance(data, MatrixDataset):
        data = MatrixDataset(data)
    A, B = _check_basis(data, *_frames(basis))
    mean = data.mean if mean is None else np.asarray(mean, dtype=float)
    U = A.T @ (data.samples - mean) @ B
    return MatrixDataset(mean + A @ U @ B.T)


def tensor_principal_components(basis):
    """Loadings ``b_j ⊗ a_i`` as the columns of ``kron(B, A)``.

    Column ``j * pdim + i`` is ``b_j ⊗ a_i``.
    """
    from .baselines import PcaBasis

    G = kron(basis.B, basis.A)
    weights = np.kron(np.asarray(basis.xi), np.asarray(basis.lam))
    return PcaBasis(G, weights)


def explained_variance(data, basis):
    """Fraction of total centered variance retained by the basis."""
    tv = total_variance(data)
    if tv <= 0:
        raise ValidationError("dataset has zero variance")
    return min(max(objective(data, basis.A, basis.B) / tv, 0.0), 1.0)


def with_dims(cfg, pdim, qdim):
    return replace(cfg, pdim=pdim, qdim=qdim)
