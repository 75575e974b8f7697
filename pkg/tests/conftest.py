import math

import numpy as np
import pytest

from kuramoto_inverse.cases import random_network
from kuramoto_inverse.graph import Network, build_operators


def arcsin_coefficient(k: int) -> float:
    """Maclaurin coefficient of t^(2k+1) in arcsin(t)."""
    return math.factorial(2 * k) / (4 ** k * math.factorial(k) ** 2 * (2 * k + 1))


def arcsin_poly(t, N):
    return sum(arcsin_coefficient(k) * t ** (2 * k + 1) for k in range(N + 1))


def remark_terms(P, eta):
    """A1..A7 written out term by term from the closed forms (independent of the recursion)."""
    A1 = eta
    A3 = P @ (eta ** 3 / 6)
    A5 = P @ (3 / 6 * A3 * eta ** 2 - eta ** 5 / 120)
    A7 = P @ (3 / 6 * A5 * eta ** 2 + 3 / 6 * A3 ** 2 * eta - 5 / 120 * A3 * eta ** 4 + eta ** 7 / 5040)
    return [A1, A3, A5, A7]


def brute_projection(B, w):
    """Cutset projection via numpy's SVD pseudoinverse."""
    L = B @ np.diag(w) @ B.T
    return B.T @ np.linalg.pinv(L) @ B @ np.diag(w)


def random_cut_vector(ops, rng, scale=1.0):
    """Random eta = B^T y normalised to ||eta||_inf = scale."""
    eta = ops.B.T @ rng.normal(size=ops.n)
    return scale * eta / np.max(np.abs(eta))


def random_instances(count, seed, n_range=(3, 10), p_range=(0.2, 0.8)):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        p = float(rng.uniform(*p_range))
        out.append(build_operators(random_network(n, p, (0.1, 10.0), seed=seed * 1000 + k)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def edge_ops():
    return build_operators(Network(2, ((0, 1, 1.0),)))


@pytest.fixture
def triangle():
    return Network(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)))


@pytest.fixture
def triangle_ops(triangle):
    return build_operators(triangle)


@pytest.fixture
def bowtie():
    # two triangles sharing node 2
    return Network(5, ((0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5), (2, 3, 1.5), (3, 4, 1.0), (2, 4, 3.0)))
