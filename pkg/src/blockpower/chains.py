"""Test chains with known answers, and dense brute-force oracles.

Families:

* ``fig1`` -- the five-state chain whose |lambda_2|, |lambda_3| sit at
  0.9998 / 0.9996 while |lambda_4| = 0.5483.
* ``birth_death`` -- reflecting nearest-neighbour walk on ``0..n-1``.
* ``random_reversible`` -- random walk on a seeded symmetric weighted graph.
* ``clustered`` -- ``m`` rapidly mixing dense clusters joined by rare jumps,
  giving ``m`` eigenvalues close to 1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dense_kernels import jacobi_eigh
from .errors import InvalidParameters, NotReversible, SingularSystem
from .sparse_core import SparseTransitionMatrix, check_strong_connectivity, from_dense, from_triples

DENSE_LIMIT = 2000

FIG1_DENSE = np.array([
    [0.0, 0.0, 0.0, 0.9090, 0.0910],
    [0.0002, 0.0, 0.9998, 0.0, 0.0],
    [0.0, 0.9998, 0.0, 0.0002, 0.0],
    [0.6690, 0.0, 0.0, 0.0, 0.3310],
    [0.9989, 0.0011, 0.0, 0.0, 0.0],
])
FIG1_MAGNITUDES = (1.0, 0.9998, 0.9996, 0.5483, 0.5483)


class Family(str, enum.Enum):
    FIG1 = "fig1"
    BIRTH_DEATH = "birth-death"
    RANDOM_REVERSIBLE = "reversible"
    CLUSTERED = "clustered"


@dataclass(frozen=True)
class ChainSpec:
    family: Family
    n: int = 5
    p: float = 0.25
    q: float = 0.25
    m: int = 3
    cluster_size: int = 10
    eps: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))

    @property
    def reversible(self) -> bool:
        return self.family is not Family.FIG1

    def params(self) -> dict:
        out = {"family": self.family.value}
        if self.family is Family.BIRTH_DEATH:
            out.update(n=self.n, p=self.p, q=self.q)
        elif self.family is Family.RANDOM_REVERSIBLE:
            out.update(n=self.n, seed=self.seed)
        elif self.family is Family.CLUSTERED:
            out.update(m=self.m, cluster_size=self.cluster_size, eps=self.eps, seed=self.seed)
        return out


def fig1() -> SparseTransitionMatrix:
    return from_dense(FIG1_DENSE)


def birth_death(n: int, p: float, q: float) -> SparseTransitionMatrix:
    if n < 2 or not (0 < p and 0 < q and p + q <= 1):
        raise InvalidParameters(f"birth-death needs n >= 2, p, q > 0, p + q <= 1 (n={n}, p={p}, q={q})")
    rows, cols, vals = [], [], []
    for i in range(n):
        up = p if i < n - 1 else 0.0
        down = q if i > 0 else 0.0
        stay = 1.0 - up - down
        for j, v in ((i - 1, down), (i, stay), (i + 1, up)):
            if v > 0:
                rows.append(i)
                cols.append(j)
                vals.append(v)
    return from_triples(n, rows, cols, vals)


def reversible_weights(n: int, seed: int) -> np.ndarray:
    """Symmetric nonnegative weights on a ring plus random chords, seeded."""
    if n < 3:
        raise InvalidParameters(f"random reversible chain needs n >= 3, got {n}")
    rng = np.random.default_rng(seed)
    G = np.zeros((n, n))
    idx = np.arange(n)
    G[idx, (idx + 1) % n] = rng.uniform(0.1, 1.0, n)
    chords = np.triu(rng.random((n, n)) < 2.0 / n, k=2)
    G[chords] = rng.uniform(0.1, 1.0, int(chords.sum()))
    G = G + G.T
    G[idx, idx] = rng.uniform(0.0, 1.0, n)
    return G


def random_reversible(n: int, seed: int) -> SparseTransitionMatrix:
    G = reversible_weights(n, seed)
    return from_dense(G / G.sum(axis=1, keepdims=True))


def _symmetric_doubly_stochastic(c: int, rng) -> np.ndarray:
    S = rng.uniform(0.0, 1.0, (c, c))
    S = S + S.T
    for _ in range(1000):
        d = 1.0 / np.sqrt(S.sum(axis=1))
        S = d[:, None] * S * d[None, :]
        if np.abs(S.sum(axis=1) - 1.0).max() < 1e-15:
            break
    return 0.5 * (S + S.T)


def clustered(m: int, cluster_size: int, eps: float, seed: int = 0) -> SparseTransitionMatrix:
    """``m`` dense clusters; with probability ``eps`` jump uniformly into another cluster.

    Intra-cluster rows are symmetric doubly-stochastic random matrices, so the
    whole chain is symmetric (reversible, uniform stationary distribution).
    """
    if m < 2 or cluster_size < 1 or not 0 < eps < 1.0 / m:
        raise InvalidParameters(
            f"clustered chain needs m >= 2, cluster_size >= 1, 0 < eps < 1/m "
            f"(m={m}, cluster_size={cluster_size}, eps={eps})"
        )
    rng = np.random.default_rng(seed)
    c = cluster_size
    n = m * c
    P = np.full((n, n), eps / ((m - 1) * c))
    for a in range(m):
        sl = slice(a * c, (a + 1) * c)
        P[sl, sl] = (1.0 - eps) * _symmetric_doubly_stochastic(c, rng)
    return from_dense(P)


def generate(spec: ChainSpec) -> SparseTransitionMatrix:
    if spec.family is Family.FIG1:
        return fig1()
    if spec.family is Family.BIRTH_DEATH:
        return birth_death(spec.n, spec.p, spec.q)
    if spec.family is Family.RANDOM_REVERSIBLE:
        return random_reversible(spec.n, spec.seed)
    return clustered(spec.m, spec.cluster_size, spec.eps, spec.seed)


def stationary_oracle_dense(A: SparseTransitionMatrix) -> np.ndarray:
    """Stationary distribution by a direct dense solve.

    The last equation of ``(P.T - I) x = 0`` is replaced by ``sum(x) = 1`` and
    the square system is solved by LU with partial pivoting.
    """
    if A.n > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_LIMIT}, got {A.n}")
    if not check_strong_connectivity(A).irreducible:
        raise SingularSystem("reducible chain: stationary distribution is not unique")
    M = A.to_dense().T - np.eye(A.n)
    M[-1, :] = 1.0
    rhs = np.zeros(A.n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as err:
        raise SingularSystem(str(err)) from None
    return pi


def is_reversible(A: SparseTransitionMatrix, pi, tol=1e-10) -> bool:
    i, j, v = A.triples()
    P = A.to_dense()
    flow = pi[i] * v
    return bool(np.all(np.abs(flow - pi[j] * P[j, i]) <= tol))


def spectrum_oracle_reversible(A: SparseTransitionMatrix, pi) -> np.ndarray:
    """Eigenvalue magnitudes of a reversible chain, descending.

    Uses the symmetric similarity transform ``D^(1/2) P D^(-1/2)`` with
    ``D = diag(pi)`` and cyclic Jacobi.
    """
    if A.n > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_LIMIT}, got {A.n}")
    pi = np.asarray(pi, dtype=np.float64)
    if not is_reversible(A, pi):
        raise NotReversible("detailed balance fails for the given distribution")
    d = np.sqrt(pi)
    S = d[:, None] * A.to_dense() / d[None, :]
    return np.sort(np.abs(jacobi_eigh(S).eigenvalues))[::-1]
