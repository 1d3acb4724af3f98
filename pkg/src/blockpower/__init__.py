"""Stationary distributions of finite Markov chains by power, block power
and sliding-window block iteration."""

from .chains import ChainSpec, generate, spectrum_oracle_reversible, stationary_oracle_dense
from .solver import (
    ConvergenceReport,
    SolverConfig,
    Status,
    extract_dominant_ritz,
    extract_min_residual,
    fit_convergence_rate,
    solve,
)
from .sparse_core import (
    SparseTransitionMatrix,
    apply_transpose,
    check_strong_connectivity,
    load_matrix_market,
    write_matrix_market,
)

__version__ = "0.1.0"
