"""Sparse storage of a Markov transition operator and the kernels that apply it.

The matrix is kept as compressed sparse rows of ``P.T`` (rows of the stored
structure are columns of ``P``), so ``x -> P.T @ x`` is a plain row sweep.
Dense blocks are ordinary ``(n, s)`` float64 numpy arrays.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DimensionMismatch, DuplicateEntryError, ParseError, StochasticityError

ROW_SUM_TOL = 1e-12

__all__ = [
    "SparseTransitionMatrix",
    "MatvecCounter",
    "ConnectivityReport",
    "from_dense",
    "from_triples",
    "load_matrix_market",
    "write_matrix_market",
    "apply_transpose",
    "check_strong_connectivity",
]


@dataclass(frozen=True)
class SparseTransitionMatrix:
    """Row-stochastic ``P`` stored as CSR of ``P.T``.

    ``row_ptr``/``col_idx``/``values`` describe ``P.T``: the entries of stored
    row ``j`` are ``P[i, j]`` for ``i`` in ``col_idx[row_ptr[j]:row_ptr[j+1]]``,
    with ``i`` ascending.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    def triples(self):
        """Return ``(i, j, P[i, j])`` arrays, 0-based, ordered by ``(i, j)``."""
        j = np.repeat(np.arange(self.n), np.diff(self.row_ptr))
        i = self.col_idx
        order = np.lexsort((j, i))
        return i[order].copy(), j[order].copy(), self.values[order].copy()

    def to_dense(self) -> np.ndarray:
        """Dense ``P`` (for oracles and small tests only)."""
        P = np.zeros((self.n, self.n))
        i, j, v = self.triples()
        P[i, j] = v
        return P


@dataclass
class MatvecCounter:
    """Cost accounting: ``matvecs`` single-vector products, ``passes`` sweeps over the matrix."""

    matvecs: int = 0
    passes: int = 0


@dataclass(frozen=True)
class ConnectivityReport:
    irreducible: bool
    n_components: int
    component_sizes: tuple = field(default=())


def from_triples(n, rows, cols, vals, *, one_based=False) -> SparseTransitionMatrix:
    """Build and validate a transition matrix from ``(i, j, P[i, j])`` triples."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if one_based:
        rows = rows - 1
        cols = cols - 1
    if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
        raise ParseError("row, column and value arrays must be 1-d and equally long")
    if n < 1:
        raise ParseError(f"matrix dimension must be positive, got {n}")
    if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise ParseError(f"index out of range for a {n}x{n} matrix")

    # transposed layout: stored row = column of P, stored column = row of P
    order = np.lexsort((rows, cols))
    t_rows, t_cols, t_vals = cols[order], rows[order], vals[order]
    if t_rows.size > 1:
        dup = (t_rows[1:] == t_rows[:-1]) & (t_cols[1:] == t_cols[:-1])
        if dup.any():
            k = int(np.flatnonzero(dup)[0])
            raise DuplicateEntryError(
                f"duplicate entry ({t_cols[k] + 1}, {t_rows[k] + 1})"
            )

    if not np.all(np.isfinite(vals)):
        raise StochasticityError("non-finite transition probability")
    bad = np.flatnonzero((vals < 0) | (vals > 1))
    if bad.size:
        r = int(rows[bad[0]])
        raise StochasticityError(
            f"row {r + 1} has an entry outside [0, 1]: {vals[bad[0]]!r}", row=r
        )
    sums = np.bincount(rows, weights=vals, minlength=n)
    off = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if off.size:
        r = int(off[0])
        raise StochasticityError(f"row {r + 1} sums to {sums[r]!r}, not 1", row=r)

    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(t_rows, minlength=n), out=row_ptr[1:])
    arrays = [row_ptr, t_cols.copy(), t_vals.copy()]
    for a in arrays:
        a.setflags(write=False)
    return SparseTransitionMatrix(n, *arrays)


def from_dense(P) -> SparseTransitionMatrix:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {P.shape}")
    i, j = np.nonzero(P)
    return from_triples(P.shape[0], i, j, P[i, j])


def load_matrix_market(path) -> SparseTransitionMatrix:
    """Read a ``coordinate real general`` MatrixMarket file holding ``P`` row-wise."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if (
            len(header) != 5
            or header[0] != "%%MatrixMarket"
            or [h.lower() for h in header[1:]] != ["matrix", "coordinate", "real", "general"]
        ):
            raise ParseError(f"{path}: unsupported MatrixMarket header {' '.join(header)!r}")
        line = fh.readline()
        while line and (line.startswith("%") or not line.strip()):
            line = fh.readline()
        try:
            nrows, ncols, nnz = (int(tok) for tok in line.split())
        except ValueError:
            raise ParseError(f"{path}: bad size line {line.strip()!r}") from None
        if nrows != ncols:
            raise ParseError(f"{path}: transition matrix must be square, got {nrows}x{ncols}")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        k = 0
        for lineno, line in enumerate(fh, start=3):
            if line.startswith("%") or not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3 or k >= nnz:
                raise ParseError(f"{path}:{lineno}: malformed entry {line.strip()!r}")
            try:
                rows[k], cols[k], vals[k] = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed entry {line.strip()!r}") from None
            k += 1
        if k != nnz:
            raise ParseError(f"{path}: expected {nnz} entries, found {k}")
    return from_triples(nrows, rows, cols, vals, one_based=True)


def write_matrix_market(A: SparseTransitionMatrix, path, comment=None) -> None:
    i, j, v = A.triples()
    lines = ["%%MatrixMarket matrix coordinate real general"]
    if comment:
        lines += [f"% {c}" for c in comment.splitlines()]
    lines.append(f"{A.n} {A.n} {A.nnz}")
    lines += [f"{a + 1} {b + 1} {x:.17g}" for a, b, x in zip(i, j, v)]
    Path(path).write_text("\n".join(lines) + "\n")


@numba.njit(cache=True)
def _spmm(row_ptr, col_idx, values, X, out):
    n, s = X.shape
    acc = np.empty(s)
    for r in range(n):
        for k in range(s):
            acc[k] = 0.0
        for jj in range(row_ptr[r], row_ptr[r + 1]):
            a = values[jj]
            c = col_idx[jj]
            for k in range(s):
                acc[k] += a * X[c, k]
        for k in range(s):
            out[r, k] = acc[k]


@numba.njit(cache=True)
def _spmm_power(row_ptr, col_idx, values, X, count):
    cur = X.copy()
    nxt = np.empty_like(X)
    for _ in range(count):
        _spmm(row_ptr, col_idx, values, cur, nxt)
        cur, nxt = nxt, cur
    return cur


def _as_block(A, X):
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != A.n:
        raise DimensionMismatch(f"block has shape {X.shape}, matrix has n={A.n}")
    return np.ascontiguousarray(X), squeeze


def apply_transpose(A: SparseTransitionMatrix, X, counter: MatvecCounter | None = None):
    """Return ``P.T @ X`` in a single sweep over the stored nonzeros.

    Accepts a vector or an ``(n, s)`` block. Each output column is accumulated
    in ascending stored order, so a block product equals the column-by-column
    products bit for bit.
    """
    X, squeeze = _as_block(A, X)
    out = np.empty_like(X)
    _spmm(A.row_ptr, A.col_idx, A.values, X, out)
    if counter is not None:
        counter.matvecs += X.shape[1]
        counter.passes += 1
    return out[:, 0] if squeeze else out


def apply_transpose_power(A: SparseTransitionMatrix, X, count: int,
                          counter: MatvecCounter | None = None):
    """``(P.T)**count @ X`` without intermediate normalization."""
    X, squeeze = _as_block(A, X)
    out = _spmm_power(A.row_ptr, A.col_idx, A.values, X, int(count)) if count > 0 else X.copy()
    if counter is not None:
        counter.matvecs += X.shape[1] * count
        counter.passes += count
    return out[:, 0] if squeeze else out


def check_strong_connectivity(A: SparseTransitionMatrix, warn=False) -> ConnectivityReport:
    """Strongly connected components of the positive-entry pattern of ``P``."""
    positive = A.values > 0
    j = np.repeat(np.arange(A.n), np.diff(A.row_ptr))
    graph = csr_matrix(
        (np.ones(int(positive.sum())), (A.col_idx[positive], j[positive])), shape=(A.n, A.n)
    )
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    sizes = tuple(int(c) for c in np.bincount(labels))
    report = ConnectivityReport(irreducible=ncomp == 1, n_components=int(ncomp),
                                component_sizes=sizes)
    if warn and not report.irreducible:
        warnings.warn(
            f"chain is reducible ({ncomp} strongly connected components); "
            "the stationary distribution is not unique",
            RuntimeWarning,
            stacklevel=2,
        )
    return report
