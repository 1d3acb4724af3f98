"""Seeded experiment suites shared by the acceptance tests and scripts/."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import ChainSpec, generate, spectrum_oracle_reversible, stationary_oracle_dense
from .errors import InsufficientData
from .solver import SolverConfig, fit_convergence_rate, solve


@dataclass(frozen=True)
class RateCase:
    spec: ChainSpec
    block_size: int


@dataclass(frozen=True)
class RateResult:
    case: RateCase
    magnitudes: np.ndarray
    check_interval: int
    iterations: int
    fitted: float  # 10**slope, nan when the fit had too few points

    @property
    def predicted(self) -> float:
        return float(self.magnitudes[self.case.block_size])

    @property
    def relative_error(self) -> float:
        return abs(self.fitted - self.predicted) / self.predicted


def reversible_rate_suite(n_cases: int = 20, seed: int = 2024) -> list[RateCase]:
    """Alternating birth-death and random-reversible chains with block sizes 1..3."""
    rng = np.random.default_rng(seed)
    cases = []
    for k in range(n_cases):
        s = int(rng.integers(1, 4))
        if k % 2 == 0:
            spec = ChainSpec("birth-death", n=int(rng.integers(10, 41)),
                             p=float(rng.uniform(0.1, 0.45)), q=float(rng.uniform(0.1, 0.45)))
        else:
            spec = ChainSpec("reversible", n=int(rng.integers(20, 201)),
                             seed=int(rng.integers(0, 2**31)))
        cases.append(RateCase(spec, s))
    return cases


def chain_spectrum(spec: ChainSpec):
    A = generate(spec)
    return A, spectrum_oracle_reversible(A, stationary_oracle_dense(A))


def measure_rate(case: RateCase, window: int = 1, points: int = 40, tol: float = 1e-10) -> RateResult:
    """Solve one case and fit its per-iteration residual contraction.

    The checkpoint cadence aims for about ``points`` checkpoints before the
    residual reaches ``tol``; with a window it never drops below ``window``
    so each checkpoint sees a full window.
    """
    A, mags = chain_spectrum(case.spec)
    s = case.block_size
    rate = mags[min(s * window, A.n - 1)]
    expected_iters = np.log(tol) / np.log(rate) if 0 < rate < 1 else points
    ci = max(window if window > 1 else 1, int(expected_iters // points))
    rep = solve(A, SolverConfig(block_size=s, window_length=window, check_interval=ci, tol=tol))
    try:
        fitted = 10 ** fit_convergence_rate(rep.residual_history)
    except InsufficientData:
        fitted = float("nan")
    return RateResult(case, mags, ci, rep.total_iterations, fitted)
