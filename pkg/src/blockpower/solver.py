"""Power, block power and sliding-window iterations for stationary distributions.

The iteration never normalizes: ``P`` is stochastic, so probability columns
stay probability columns. Every ``check_interval`` steps a decomposition
checkpoint extracts a candidate distribution from the current block (or the
sliding window of recent blocks) and measures ``||P.T v - v||_2``.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .dense_kernels import dominant_eigenpair_small, jacobi_eigh, mgs_qr
from .errors import (
    DependentColumns,
    InsufficientData,
    NegativeMassError,
    NoConvergence,
    NumericalBreakdown,
)
from .sparse_core import (
    MatvecCounter,
    SparseTransitionMatrix,
    apply_transpose,
    apply_transpose_power,
    check_strong_connectivity,
)

log = logging.getLogger(__name__)

NEGATIVE_CLAMP = 1e-8


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_BREAKDOWN = "NumericalBreakdown"


class Extraction(str, enum.Enum):
    MIN_RESIDUAL = "min_residual"
    DOMINANT_RITZ = "dominant_ritz"


@dataclass(frozen=True)
class SolverConfig:
    block_size: int = 1
    window_length: int = 1
    tol: float = 1e-10
    check_interval: int = 100
    max_iterations: int = 1_000_000
    seed: int = 0
    reorthonormalize_at_checkpoint: bool = True
    extraction: Extraction = Extraction.MIN_RESIDUAL
    drop_tol: float = 1e-10

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")
        if self.window_length < 1:
            raise ValueError(f"window_length must be >= 1, got {self.window_length}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.check_interval < 1:
            raise ValueError(f"check_interval must be >= 1, got {self.check_interval}")
        if self.max_iterations < 0:
            raise ValueError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if not 0 < self.drop_tol < 1:
            raise ValueError(f"drop_tol must lie in (0, 1), got {self.drop_tol}")
        object.__setattr__(self, "extraction", Extraction(self.extraction))


class SlidingWindow:
    """The ``t`` most recent iterate blocks, oldest first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = capacity
        self._blocks = deque(maxlen=capacity)

    def __len__(self):
        return len(self._blocks)

    def push(self, block):
        self._blocks.append(block)

    def clear(self):
        self._blocks.clear()

    def assemble(self) -> np.ndarray:
        if not self._blocks:
            raise ValueError("window is empty")
        return np.hstack(list(self._blocks))


@dataclass(frozen=True)
class ExtractionResult:
    distribution: np.ndarray
    residual: float
    effective_rank: int
    ritz_value: float
    vector: np.ndarray  # sign-fixed, unit 2-norm


@dataclass(frozen=True)
class Checkpoint:
    iteration: int
    matvecs: int
    residual: float
    effective_rank: int


@dataclass
class ConvergenceReport:
    distribution: np.ndarray | None
    residual_history: list = field(default_factory=list)
    total_matvecs: int = 0
    total_iterations: int = 0
    status: Status = Status.MAX_ITERATIONS
    final_block: np.ndarray | None = None
    min_residual_eigenvalues: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1].residual if self.residual_history else float("nan")

    def history_csv(self) -> str:
        return history_to_csv(self.residual_history)


def history_to_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "matvecs", "residual", "effective_rank"])
    for c in history:
        w.writerow([c.iteration, c.matvecs, f"{c.residual:.16e}", c.effective_rank])
    return buf.getvalue()


def make_initial_block(n: int, s: int, seed: int = 0, drop_tol: float = 1e-10) -> np.ndarray:
    """``s`` seeded random probability vectors, checked for linear independence."""
    if not 1 <= s <= n:
        raise ValueError(f"need 1 <= s <= n, got s={s}, n={n}")
    for attempt in range(5):
        rng = np.random.default_rng(seed + attempt)
        X = rng.uniform(0.0, 1.0, size=(n, s))
        X /= X.sum(axis=0)
        if mgs_qr(X, drop_tol).dropped_count == 0:
            return X
    raise DependentColumns(f"no independent {n}x{s} start block after 5 attempts")


def iterate_block(A: SparseTransitionMatrix, X, count: int,
                  counter: MatvecCounter | None = None) -> np.ndarray:
    """Apply ``P.T`` to ``X`` ``count`` times, no normalization in between."""
    out = apply_transpose_power(A, X, count, counter)
    if not np.all(np.isfinite(out)):
        raise NumericalBreakdown("non-finite entries in the iterated block")
    return out


def _postprocess(A, v, effective_rank, ritz_value):
    v = v / np.linalg.norm(v)
    if v.sum() < 0:
        v = -v
    residual = float(np.linalg.norm(apply_transpose(A, v) - v))
    if v.min() < -NEGATIVE_CLAMP:
        raise NegativeMassError(
            f"extracted vector has entry {v.min():.3e} below -{NEGATIVE_CLAMP:g}",
            residual=residual,
            effective_rank=effective_rank,
        )
    pi = np.where(v < 0, 0.0, v)
    pi /= pi.sum()
    return ExtractionResult(pi, residual, effective_rank, ritz_value, v)


def extract_min_residual(A: SparseTransitionMatrix, W, drop_tol: float = 1e-10) -> ExtractionResult:
    """Vector of ``span(W)`` minimizing ``||P.T v - v||_2`` over unit vectors.

    ``ritz_value`` is the smallest eigenvalue of ``Z.T Z`` with
    ``Z = (P.T - I) Q``; mathematically it equals ``residual**2``, but the
    residual is recomputed from the extracted vector.
    """
    Q = mgs_qr(W, drop_tol).q
    Z = apply_transpose(A, Q) - Q
    eig = jacobi_eigh(Z.T @ Z)
    v = Q @ eig.eigenvectors[:, 0]
    return _postprocess(A, v, Q.shape[1], float(eig.eigenvalues[0]))


def extract_dominant_ritz(A: SparseTransitionMatrix, W, drop_tol: float = 1e-10) -> ExtractionResult:
    """Ritz vector of the largest Ritz value of ``Q.T P.T Q``.

    Falls back to :func:`extract_min_residual` when the small eigenproblem
    does not settle.
    """
    Q = mgs_qr(W, drop_tol).q
    B = Q.T @ apply_transpose(A, Q)
    try:
        value, y = dominant_eigenpair_small(B)
    except NoConvergence:
        log.debug("dominant Ritz pair did not settle; using min-residual extraction")
        return extract_min_residual(A, W, drop_tol)
    return _postprocess(A, Q @ y, Q.shape[1], value)


_EXTRACTORS = {
    Extraction.MIN_RESIDUAL: extract_min_residual,
    Extraction.DOMINANT_RITZ: extract_dominant_ritz,
}


def solve(A: SparseTransitionMatrix, cfg: SolverConfig = SolverConfig()) -> ConvergenceReport:
    """Run the configured iteration until the residual drops to ``cfg.tol``.

    ``block_size=1, window_length=1`` is the plain power method. Never raises
    on non-convergence; the report's ``status`` says how the run ended.
    """
    s, t = cfg.block_size, cfg.window_length
    if not check_strong_connectivity(A).irreducible:
        check_strong_connectivity(A, warn=True)
    extract = _EXTRACTORS[cfg.extraction]
    counter = MatvecCounter()
    X = make_initial_block(A.n, s, cfg.seed, cfg.drop_tol)
    window = SlidingWindow(t)
    report = ConvergenceReport(distribution=None)
    iteration = 0

    while iteration < cfg.max_iterations:
        steps = min(cfg.check_interval, cfg.max_iterations - iteration)
        try:
            if t == 1:
                X = iterate_block(A, X, steps, counter)
            else:
                for _ in range(steps):
                    X = iterate_block(A, X, 1, counter)
                    window.push(X)
        except NumericalBreakdown:
            report.status = Status.NUMERICAL_BREAKDOWN
            break
        iteration += steps
        W = window.assemble() if t > 1 else X

        try:
            ex = extract(A, W, cfg.drop_tol)
        except NegativeMassError as err:
            report.residual_history.append(
                Checkpoint(iteration, counter.matvecs, err.residual, err.effective_rank))
        else:
            report.distribution = ex.distribution
            report.residual_history.append(
                Checkpoint(iteration, counter.matvecs, ex.residual, ex.effective_rank))
            if cfg.extraction is Extraction.MIN_RESIDUAL:
                report.min_residual_eigenvalues.append(ex.ritz_value)
            if not np.isfinite(ex.residual):
                report.status = Status.NUMERICAL_BREAKDOWN
                break
            if ex.residual <= cfg.tol:
                report.status = Status.CONVERGED
                break

        if cfg.reorthonormalize_at_checkpoint:
            qr = mgs_qr(X, cfg.drop_tol)
            # a rank-deficient block keeps its raw columns so the block size stays s
            if qr.dropped_count == 0:
                X = qr.q
                window.clear()

    report.total_iterations = iteration
    report.total_matvecs = counter.matvecs
    report.final_block = X
    log.info("solve finished: %s after %d iterations (%d matvecs)",
             report.status.value, iteration, counter.matvecs)
    return report


def fit_convergence_rate(history, lower=1e-12, upper=1e-2, min_points=5) -> float:
    """Least-squares slope of ``log10(residual)`` against iteration.

    ``history`` holds :class:`Checkpoint` records or ``(iteration, residual)``
    pairs. Only checkpoints with ``lower < residual < upper`` enter the fit;
    ``10**slope`` estimates the per-iteration contraction factor.
    """
    its, res = [], []
    for c in history:
        it, r = (c.iteration, c.residual) if isinstance(c, Checkpoint) else c
        if lower < r < upper:
            its.append(it)
            res.append(r)
    if len(its) < min_points:
        raise InsufficientData(f"{len(its)} checkpoints in the decay window, need {min_points}")
    slope, _ = np.polyfit(np.asarray(its, dtype=float), np.log10(res), 1)
    return float(slope)
