import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockpower.chains import birth_death, clustered, random_reversible, stationary_oracle_dense
from blockpower.dense_kernels import jacobi_eigh, mgs_qr
from blockpower.errors import InsufficientData, NegativeMassError, NumericalBreakdown
from blockpower.solver import (
    Checkpoint,
    SlidingWindow,
    SolverConfig,
    Status,
    extract_dominant_ritz,
    extract_min_residual,
    fit_convergence_rate,
    iterate_block,
    make_initial_block,
    solve,
)
from blockpower.sparse_core import MatvecCounter, apply_transpose, from_dense


def naive_power(P, x, count):
    """Textbook loop: x_j <- sum_i P[i][j] x_i, i ascending."""
    n = len(x)
    x = [float(v) for v in x]
    for _ in range(count):
        x = [sum((P[i][j] * x[i] for i in range(n)), 0.0) for j in range(n)]
    return np.array(x)


class TestInitialBlock:
    def test_single_column(self):
        X = make_initial_block(5, 1, seed=9)
        assert X.shape == (5, 1) and X.min() >= 0
        assert abs(X.sum() - 1) <= 1e-15

    def test_square_full_rank(self):
        assert mgs_qr(make_initial_block(5, 5, seed=0)).dropped_count == 0

    def test_deterministic(self):
        assert np.array_equal(make_initial_block(30, 4, 7), make_initial_block(30, 4, 7))

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            make_initial_block(3, 4, 0)


class TestIterateBlock:
    def test_identity(self):
        A = from_dense(np.eye(6))
        X = np.random.default_rng(0).normal(size=(6, 2))
        np.testing.assert_array_equal(iterate_block(A, X, 7), X)

    def test_probability_columns_preserved(self, fig1_matrix):
        X = iterate_block(fig1_matrix, make_initial_block(5, 3, 1), 100)
        assert X.min() >= 0
        np.testing.assert_allclose(X.sum(axis=0), 1.0, atol=1e-12)

    def test_matches_dense_cube(self, fig1_matrix, fig1_dense):
        X0 = np.eye(5)[:, :3]
        expected = fig1_dense.T @ (fig1_dense.T @ (fig1_dense.T @ X0))
        np.testing.assert_allclose(iterate_block(fig1_matrix, X0, 3), expected, atol=1e-15)

    def test_counts_matvecs(self, fig1_matrix):
        counter = MatvecCounter()
        iterate_block(fig1_matrix, np.ones((5, 3)) / 5, 11, counter)
        assert counter.matvecs == 33

    def test_breakdown(self, fig1_matrix):
        X = np.ones((5, 1))
        X[2] = np.inf
        with pytest.raises(NumericalBreakdown):
            iterate_block(fig1_matrix, X, 1)


class TestSlidingWindow:
    def test_keeps_last_t_in_order(self):
        w = SlidingWindow(3)
        blocks = [np.full((4, 2), k, dtype=float) for k in range(5)]
        for b in blocks:
            w.push(b)
        assert len(w) == 3
        np.testing.assert_array_equal(w.assemble(), np.hstack(blocks[2:]))

    def test_partial(self):
        w = SlidingWindow(4)
        w.push(np.zeros((3, 1)))
        assert w.assemble().shape == (3, 1)

    def test_clear(self):
        w = SlidingWindow(2)
        w.push(np.zeros((3, 1)))
        w.clear()
        with pytest.raises(ValueError):
            w.assemble()


class TestExtractMinResidual:
    def test_exact_eigenvector(self, fig1_matrix):
        pi = stationary_oracle_dense(fig1_matrix)
        ex = extract_min_residual(fig1_matrix, pi[:, None])
        assert ex.residual <= 1e-12
        np.testing.assert_allclose(ex.distribution, pi, atol=1e-12)

    def test_span_beats_each_column(self):
        A = birth_death(8, 0.3, 0.2)
        pi = stationary_oracle_dense(A)
        e1 = np.eye(8)[:, 0]
        rng = np.random.default_rng(0)
        noisy = pi + 1e-3 * rng.random(8)
        noisy /= noisy.sum()
        ex = extract_min_residual(A, np.column_stack([noisy, e1]))
        for col in (noisy, e1):
            u = col / np.linalg.norm(col)
            assert ex.residual <= np.linalg.norm(apply_transpose(A, u) - u) + 1e-15

    def test_identity_of_smallest_eigenvalue(self):
        # residual^2 equals lambda_min(Z^T Z); both computed independently
        A = birth_death(10, 0.3, 0.3)
        W = iterate_block(A, make_initial_block(10, 2, 0), 50)
        ex = extract_min_residual(A, W)
        Q = mgs_qr(W).q
        Z = apply_transpose(A, Q) - Q
        lam = jacobi_eigh(Z.T @ Z).eigenvalues[0]
        assert abs(ex.residual**2 - lam) <= 1e-10 * ex.residual**2
        assert lam == ex.ritz_value

    def test_negative_mass_rejected(self, fig1_matrix):
        W = np.array([[1.0], [-1.0], [0.5], [0.0], [0.2]])
        with pytest.raises(NegativeMassError) as info:
            extract_min_residual(fig1_matrix, W)
        assert info.value.effective_rank == 1 and info.value.residual > 0

    def test_tiny_negatives_clamped(self, fig1_matrix):
        pi = stationary_oracle_dense(fig1_matrix)
        W = pi.copy()
        W[0] = -1e-10
        ex = extract_min_residual(fig1_matrix, W[:, None])
        assert ex.distribution[0] == 0.0
        assert abs(ex.distribution.sum() - 1) <= 1e-15


class TestExtractDominantRitz:
    def test_exact_eigenvector(self, fig1_matrix):
        pi = stationary_oracle_dense(fig1_matrix)
        ex = extract_dominant_ritz(fig1_matrix, pi[:, None])
        assert abs(ex.ritz_value - 1) <= 1e-10 and ex.residual <= 1e-10

    def test_single_column_is_identity_projection(self, fig1_matrix):
        x = np.array([0.1, 0.2, 0.3, 0.25, 0.15])
        ex = extract_dominant_ritz(fig1_matrix, x[:, None])
        np.testing.assert_allclose(ex.distribution, x, atol=1e-15)

    def test_block_of_three_after_60_steps(self, fig1_matrix):
        W = iterate_block(fig1_matrix, make_initial_block(5, 3, 0), 60)
        ex = extract_dominant_ritz(fig1_matrix, W)
        pi = stationary_oracle_dense(fig1_matrix)
        assert np.abs(ex.distribution - pi).max() <= 1e-8

    def test_falls_back_when_pair_does_not_settle(self):
        # period-2 chain: Ritz values +1 and -1 tie in magnitude
        A = from_dense(np.array([[0.0, 1.0], [1.0, 0.0]]))
        ex = extract_dominant_ritz(A, np.eye(2))
        np.testing.assert_allclose(ex.distribution, [0.5, 0.5], atol=1e-15)
        assert ex.residual <= 1e-15


class TestSolve:
    def test_fig1_block_three(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=1))
        assert rep.status is Status.CONVERGED
        assert rep.total_iterations <= 100

    def test_fig1_power_method(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=1))
        assert rep.converged
        assert 86_000 <= rep.total_iterations <= 160_000

    def test_reducible_runs_to_cap(self):
        # {0, 1} is a closed period-2 class, state 2 is absorbing
        P = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.warns(RuntimeWarning, match="reducible"):
            rep = solve(from_dense(P), SolverConfig(block_size=1, max_iterations=500, tol=1e-14))
        assert rep.status is Status.MAX_ITERATIONS
        assert rep.total_iterations == 500

    def test_absorbing_chain_finds_a_stationary_vector(self):
        P = np.eye(3)
        P[2] = [0.5, 0.0, 0.5]
        with pytest.warns(RuntimeWarning):
            rep = solve(from_dense(P), SolverConfig(block_size=1))
        assert rep.converged
        np.testing.assert_allclose(rep.distribution @ P, rep.distribution, atol=1e-12)

    def test_max_iterations_not_multiple_of_interval(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(max_iterations=250))
        assert [c.iteration for c in rep.residual_history] == [100, 200, 250]
        assert rep.status is Status.MAX_ITERATIONS

    def test_power_equivalence_bitwise(self, fig1_matrix, fig1_dense):
        cfg = SolverConfig(block_size=1, reorthonormalize_at_checkpoint=False,
                           max_iterations=300, tol=1e-300, check_interval=100)
        rep = solve(fig1_matrix, cfg)
        x0 = make_initial_block(5, 1, cfg.seed)[:, 0]
        assert np.array_equal(rep.final_block[:, 0], naive_power(fig1_dense.tolist(), x0, 300))

    def test_power_equivalence_single_steps(self, fig1_matrix, fig1_dense):
        x = make_initial_block(5, 1, 3)
        ref = x[:, 0]
        for _ in range(25):
            x = iterate_block(fig1_matrix, x, 1)
            ref = naive_power(fig1_dense.tolist(), ref, 1)
            assert np.array_equal(x[:, 0], ref)

    @pytest.mark.parametrize("s,t", [(1, 1), (2, 1), (1, 4), (2, 3)])
    def test_matvec_accounting(self, s, t):
        A = random_reversible(30, 4)
        rep = solve(A, SolverConfig(block_size=s, window_length=t, check_interval=7))
        assert rep.total_matvecs == s * rep.total_iterations
        for c in rep.residual_history:
            assert c.matvecs == s * c.iteration

    @pytest.mark.parametrize("s,t", [(1, 1), (3, 1), (1, 4), (2, 2)])
    def test_output_distribution(self, s, t):
        A = clustered(3, 6, 1e-3, seed=2)
        rep = solve(A, SolverConfig(block_size=s, window_length=t, check_interval=10))
        assert rep.converged
        pi = rep.distribution
        assert pi.min() >= 0 and abs(pi.sum() - 1) <= 1e-12
        assert np.linalg.norm(apply_transpose(A, pi) - pi) <= rep.final_residual <= 1e-10

    def test_converged_final_residual_below_tol(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=5, tol=1e-9))
        assert rep.final_residual <= 1e-9
        assert all(c.residual > 1e-9 for c in rep.residual_history[:-1])

    def test_span_preservation_under_reorthonormalization(self, fig1_matrix):
        on = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=1))
        off = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=1,
                                              reorthonormalize_at_checkpoint=False))
        assert len(on.residual_history) == len(off.residual_history)
        for a, b in zip(on.residual_history, off.residual_history):
            # relative 1e-8 until the residual nears the float64 cancellation floor
            assert abs(a.residual - b.residual) <= max(1e-8 * b.residual, 1e-14)

    def test_proposition_identity_with_rounding_floor(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=1))
        assert len(rep.min_residual_eigenvalues) == len(rep.residual_history)
        for c, lam in zip(rep.residual_history, rep.min_residual_eigenvalues):
            assert abs(c.residual**2 - lam) <= 1e-10 * c.residual**2 + 1e-14

    def test_window_rank_reported(self):
        A = clustered(3, 10, 1e-4)
        rep = solve(A, SolverConfig(window_length=4))
        assert rep.converged and rep.total_matvecs == 100
        assert 1 <= rep.residual_history[-1].effective_rank <= 4

    def test_dominant_ritz_mode(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=1,
                                              extraction="dominant_ritz"))
        assert rep.converged and rep.total_iterations <= 100
        assert rep.min_residual_eigenvalues == []

    def test_history_csv(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=10))
        rows = list(csv.reader(io.StringIO(rep.history_csv())))
        assert rows[0] == ["iteration", "matvecs", "residual", "effective_rank"]
        assert len(rows) == len(rep.residual_history) + 1
        mantissa = rows[1][2].split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) == 17
        assert float(rows[-1][2]) == rep.final_residual

    @pytest.mark.parametrize("kwargs", [dict(block_size=0), dict(window_length=0), dict(tol=0.0),
                                        dict(check_interval=0), dict(drop_tol=1.0),
                                        dict(extraction="bogus")])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


class TestFitRate:
    def test_exact_geometric(self):
        hist = [(k, 0.9**k) for k in range(1, 400)]
        assert abs(fit_convergence_rate(hist) - math.log10(0.9)) <= 1e-12

    def test_checkpoint_records(self):
        hist = [Checkpoint(k, k, 0.5**k, 1) for k in range(1, 60)]
        assert abs(fit_convergence_rate(hist) - math.log10(0.5)) <= 1e-12

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            fit_convergence_rate([(1, 1e-3), (2, 1e-4), (3, 1.0)])

    def test_fig1_power_rate(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=1))
        assert abs(10 ** fit_convergence_rate(rep.residual_history) - 0.9998) <= 0.02 * 0.9998

    def test_fig1_block_rate(self, fig1_matrix):
        rep = solve(fig1_matrix, SolverConfig(block_size=3, check_interval=1))
        assert abs(10 ** fit_convergence_rate(rep.residual_history) - 0.5483) <= 0.1 * 0.5483


@given(st.integers(0, 2**31), st.integers(1, 3))
@settings(max_examples=15, deadline=None)
def test_converged_runs_match_oracle_when_gap_is_covered(seed, s):
    # block size covering every slow mode: error stays at residual level
    A = clustered(s, 6, 1e-3, seed=seed) if s > 1 else random_reversible(25, seed)
    rep = solve(A, SolverConfig(block_size=s + 1, check_interval=20, seed=seed))
    assert rep.converged
    assert np.abs(rep.distribution - stationary_oracle_dense(A)).max() <= 1e-8
