"""Symmetric eigendecomposition by cyclic Jacobi rotations.

Jacobi is used instead of LAPACK so that results are bit-reproducible for a
given input and accurate to near machine precision on the moderate sizes
handled here.  Eigenvalues come back in descending order and each
eigenvector is signed so that its largest-magnitude entry is positive
(lowest index wins ties).
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import NumericalError, ValidationError

MAX_SWEEPS = 100
OFF_TOL = 1e-12
SYMMETRY_TOL = 1e-10


@numba.njit(cache=True, nogil=True)
def _jacobi(a, v, off_tol, max_sweeps):
    # a is overwritten; on success its diagonal holds the eigenvalues.
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if np.sqrt(2.0 * off) <= off_tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                app = a[p, p]
                aqq = a[q, q]
                if abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                h = aqq - app
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    if r != p and r != q:
                        arp = a[r, p]
                        arq = a[r, q]
                        nrp = arp - s * (arq + tau * arp)
                        nrq = arq + s * (arp - tau * arq)
                        a[r, p] = nrp
                        a[p, r] = nrp
                        a[r, q] = nrq
                        a[q, r] = nrq
                for r in range(n):
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = vrp - s * (vrq + tau * vrp)
                    v[r, q] = vrq + s * (vrp - tau * vrq)
    return -1


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eig(S, k=None):
    """Leading ``k`` eigenpairs of a symmetric matrix.

    Parameters
    ----------
    S : array_like, shape (d, d)
        Symmetric matrix; asymmetry above ``1e-10 * |S|_F`` is rejected.
    k : int, optional
        Number of leading pairs to return, ``1 <= k <= d``.  Defaults to ``d``.

    Returns
    -------
    SymEigResult
        Descending eigenvalues and the matching orthonormal eigenvectors as
        columns.

    Raises
    ------
    ValidationError
        Non-square, non-symmetric or non-finite input, or ``k`` out of range.
    NumericalError
        The off-diagonal mass did not fall below ``1e-12 * |S|_F`` within
        100 sweeps.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {S.shape}")
    d = S.shape[0]
    k = d if k is None else int(k)
    if not 1 <= k <= d:
        raise ValidationError(f"k={k} out of range for a {d}x{d} matrix")
    if not np.all(np.isfinite(S)):
        raise ValidationError("matrix has non-finite entries")
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > SYMMETRY_TOL * max(scale, 1.0):
        raise ValidationError("matrix is not symmetric")

    a = np.ascontiguousarray(0.5 * (S + S.T))
    v = np.eye(d)
    sweeps = _jacobi(a, v, OFF_TOL * scale, MAX_SWEEPS)
    if sweeps < 0:
        raise NumericalError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")[:k]
    return SymEigResult(lam[order], _fix_signs(v[:, order]), sweeps)
