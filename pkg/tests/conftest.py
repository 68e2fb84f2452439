import itertools
import math

import numpy as np
import pytest


def kl_hist(p, q):
    """Plain-loop KL(p || q) in nats, written without the library."""
    total = 0.0
    for a, b in zip(p, q):
        if a == 0:
            continue
        if b == 0:
            return math.inf
        total += a * math.log(a / b)
    return total


def chi2_hist(p, q):
    total = 0.0
    for a, b in zip(p, q):
        if b == 0:
            if a > 0:
                return math.inf
            continue
        total += (a - b) ** 2 / b
    return total


def js_hist(p, q):
    m = [(a + b) / 2 for a, b in zip(p, q)]
    return 0.5 * kl_hist(p, m) + 0.5 * kl_hist(q, m)


def lecam_hist(p, q):
    return sum((a - b) ** 2 / (2 * (a + b)) for a, b in zip(p, q) if a + b > 0)


def random_pair(rng, k, alpha=1.0):
    return rng.dirichlet(np.full(k, alpha)), rng.dirichlet(np.full(k, alpha))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def transport_lp_brute_force(p, q, C):
    """Exact optimum of a 3x3 transport LP by enumerating 5-entry supports.

    Every vertex of the 3x3 transport polytope is supported on at most
    3 + 3 - 1 = 5 cells, so the best feasible solution over all 5-cell
    supports is the LP optimum.
    """
    best = math.inf
    rhs = np.concatenate([p, q])
    for supp in itertools.combinations(range(9), 5):
        A = np.zeros((6, 5))
        for j, s in enumerate(supp):
            i, k = divmod(s, 3)
            A[i, j] = 1.0
            A[3 + k, j] = 1.0
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
        if np.allclose(A @ sol, rhs, atol=1e-12) and sol.min() > -1e-12:
            best = min(best, float(sum(sol[j] * C.ravel()[s] for j, s in enumerate(supp))))
    return best
