import numpy as np
import pytest

from blockpower.chains import FIG1_DENSE, fig1


@pytest.fixture(scope="session")
def fig1_matrix():
    return fig1()


@pytest.fixture(scope="session")
def fig1_dense():
    return FIG1_DENSE.copy()


def write_mtx(path, entries, n, header="%%MatrixMarket matrix coordinate real general"):
    lines = [header, "% test file", f"{n} {n} {len(entries)}"]
    lines += [f"{i} {j} {v!r}" for i, j, v in entries]
    path.write_text("\n".join(lines) + "\n")
    return path


def random_stochastic(rng, n, density=0.5):
    P = rng.random((n, n)) * (rng.random((n, n)) < density)
    P[np.arange(n), rng.integers(0, n, n)] += 0.1
    return P / P.sum(axis=1, keepdims=True)
