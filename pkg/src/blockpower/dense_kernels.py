"""Small dense linear algebra used at decomposition checkpoints.

Everything here works on blocks with at most a few hundred columns:
rank-revealing modified Gram-Schmidt, cyclic Jacobi for symmetric
matrices, and a dominant-eigenpair routine for small nonsymmetric ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import AllColumnsZero, NoConvergence

SIGN_TOL = 1e-14


@dataclass(frozen=True)
class QrResult:
    q: np.ndarray
    r_factor: np.ndarray
    kept_columns: tuple
    dropped_count: int

    @property
    def rank(self) -> int:
        return self.q.shape[1]


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _sign_flips(V):
    """+1/-1 per column so the first entry with magnitude > SIGN_TOL is positive."""
    flips = np.ones(V.shape[1])
    for k in range(V.shape[1]):
        big = np.flatnonzero(np.abs(V[:, k]) > SIGN_TOL)
        if big.size and V[big[0], k] < 0:
            flips[k] = -1.0
    return flips


def mgs_qr(X, drop_tol=1e-10) -> QrResult:
    """Modified Gram-Schmidt with one full reorthogonalization pass.

    Column ``j`` is dropped when, after both passes, its norm has fallen below
    ``drop_tol`` times its original norm (zero columns are always dropped).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if not 0 < drop_tol < 1:
        raise ValueError(f"drop_tol must lie in (0, 1), got {drop_tol}")
    n, m = X.shape
    Q = np.empty((n, min(n, m)))
    R = np.zeros((min(n, m), m))
    kept = []
    for j in range(m):
        v = X[:, j].copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0 or len(kept) == n:
            continue
        coeffs = np.zeros(len(kept))
        for _ in range(2):
            for i in range(len(kept)):
                c = Q[:, i] @ v
                v -= c * Q[:, i]
                coeffs[i] += c
        nv = np.linalg.norm(v)
        if nv < drop_tol * norm0:
            continue
        r = len(kept)
        Q[:, r] = v / nv
        R[:r, j] = coeffs
        R[r, j] = nv
        kept.append(j)
    if not kept:
        raise AllColumnsZero("every column of the block is zero")
    r = len(kept)
    Q = Q[:, :r]
    R = R[:r][:, kept]
    flips = _sign_flips(Q)
    Q = Q * flips
    R = R * flips[:, None]
    return QrResult(q=Q, r_factor=R, kept_columns=tuple(kept), dropped_count=m - r)


@numba.njit(cache=True)
def _jacobi_sweeps(A, V, tol, max_sweeps):
    n = A.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += 2.0 * A[p, q] * A[p, q]
        if np.sqrt(off) < tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    return -1


def jacobi_eigh(B, max_sweeps=100) -> SymEigResult:
    """Full eigensystem of a symmetric matrix by cyclic Jacobi rotations.

    The input is symmetrized as ``(B + B.T) / 2``. Rotations stop once the
    off-diagonal Frobenius norm drops below ``1e-14 * ||B||_F``. Eigenvalues
    are returned ascending with orthonormal eigenvectors as columns.
    """
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    A = 0.5 * (B + B.T)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if scale > 0.0:
        sweeps = _jacobi_sweeps(A, V, 1e-14 * scale, max_sweeps)
        if sweeps < 0:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    w, V = w[order], V[:, order]
    return SymEigResult(eigenvalues=w, eigenvectors=V * _sign_flips(V))


def dominant_eigenpair_small(B, tol=1e-14, max_iter=64):
    """Dominant eigenpair of a small real matrix by power iteration.

    The iteration runs on successive squares ``B, B^2, B^4, ...`` of the
    normalized matrix, so step ``k`` advances the plain power sequence by
    ``2**k`` products; that keeps Ritz values clustered near 1 (ratios like
    0.9998) tractable. The start vector is the normalized all-ones vector.
    Stops when successive eigenvalue estimates differ by less than ``tol``
    and the eigen-residual is below ``1e-8 * ||B||_F``.
    """
    B = np.asarray(B, dtype=np.float64)
    s = B.shape[0]
    if B.shape != (s, s) or s < 1:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    if s == 1:
        return float(B[0, 0]), np.ones(1)
    x = np.full(s, 1.0 / np.sqrt(s))
    scale = np.linalg.norm(B)
    M = B.copy()
    prev = np.inf
    for _ in range(max_iter):
        y = M @ x
        ny = np.linalg.norm(y)
        if ny == 0.0 or not np.isfinite(ny):
            break
        x = y / ny
        Bx = B @ x
        value = float(x @ Bx)
        if abs(value - prev) < tol and np.linalg.norm(Bx - value * x) <= 1e-8 * scale:
            big = np.flatnonzero(np.abs(x) > SIGN_TOL)
            if big.size and x[big[0]] < 0:
                x = -x
            return value, x
        prev = value
        M = M @ M
        nm = np.linalg.norm(M)
        if nm == 0.0 or not np.isfinite(nm):
            break
        M /= nm
    raise NoConvergence("dominant eigenpair iteration did not settle")
