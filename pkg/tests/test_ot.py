import numpy as np
import pytest
from scipy.optimize import linprog

from divfrontier.frontier import mauve_score
from divfrontier.ot import (
    SinkhornConvergenceError,
    cost_matrix,
    default_epsilon,
    ot_frontier_linear,
    ot_scores,
    sinkhorn,
    sinkhorn_ot,
)

from conftest import transport_lp_brute_force

LINE = cost_matrix(np.arange(3.0))


def test_cost_matrix():
    C = cost_matrix(np.array([[0.0, 0.0], [3.0, 4.0]]))
    np.testing.assert_array_equal(C, [[0.0, 25.0], [25.0, 0.0]])
    np.testing.assert_array_equal(LINE, [[0, 1, 4], [1, 0, 1], [4, 1, 0]])


def test_default_epsilon():
    assert default_epsilon(LINE) == pytest.approx(0.05 * 1.0)
    assert default_epsilon(np.zeros((2, 2))) == 1.0


def test_identical_histograms_cost_nearly_zero():
    P = np.array([0.2, 0.3, 0.5])
    assert sinkhorn_ot(P, P, LINE, 1e-3) < 1e-6


def test_point_masses():
    C = np.array([[0.0, 4.0], [4.0, 0.0]])
    assert sinkhorn_ot([1.0, 0.0], [0.0, 1.0], C, 0.1) == pytest.approx(4.0, abs=1e-12)


def test_three_bin_example():
    assert sinkhorn_ot([0.5, 0.5, 0.0], [0.0, 0.5, 0.5], LINE, 1e-3) == pytest.approx(1.0, abs=1e-6)
    assert transport_lp_brute_force(np.array([0.5, 0.5, 0.0]), np.array([0.0, 0.5, 0.5]), LINE) == pytest.approx(1.0)


def test_brute_force_oracle_agrees_with_linprog(rng):
    for _ in range(5):
        p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        C = cost_matrix(rng.uniform(size=(3, 2)))
        A_eq = np.zeros((6, 9))
        for i in range(3):
            A_eq[i, 3 * i:3 * i + 3] = 1
            A_eq[3 + i, i::3] = 1
        lp = linprog(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([p, q]), bounds=(0, None), method="highs")
        assert transport_lp_brute_force(p, q, C) == pytest.approx(lp.fun, abs=1e-10)


def test_plan_marginals_and_lp_lower_bound(rng):
    for _ in range(10):
        p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        C = cost_matrix(rng.uniform(size=(3, 2)))
        res = sinkhorn(p, q, C, 1e-4, tol=1e-9)
        assert np.abs(res.plan.sum(axis=1) - p).sum() < 1e-9
        np.testing.assert_allclose(res.plan.sum(axis=0), q, atol=1e-12)
        assert res.cost >= transport_lp_brute_force(p, q, C) - 1e-6


def test_zero_mass_bins_are_reinserted():
    res = sinkhorn([0.5, 0.0, 0.5], [0.0, 1.0, 0.0], LINE, 0.01)
    np.testing.assert_array_equal(res.plan[1], 0.0)
    np.testing.assert_array_equal(res.plan[:, [0, 2]], 0.0)
    assert res.cost == pytest.approx(1.0)


def test_non_convergence_raises():
    with pytest.raises(SinkhornConvergenceError) as exc:
        sinkhorn([0.3, 0.7], [0.6, 0.4], np.array([[0.0, 1.0], [1.0, 0.0]]), 1e-4, max_iters=3)
    assert exc.value.iterations <= 3
    assert isinstance(exc.value, FloatingPointError)


def test_input_validation():
    with pytest.raises(ValueError):
        sinkhorn([0.5, 0.5], [0.5, 0.5], np.ones((3, 3)))
    with pytest.raises(ValueError):
        sinkhorn([0.5, 0.5], [0.5, 0.5], -np.ones((2, 2)))
    with pytest.raises(ValueError):
        sinkhorn([0.5, 0.5], [0.5, 0.5], np.ones((2, 2)), epsilon=0.0)


def test_frontier_identical_and_disjoint():
    P = np.array([0.2, 0.3, 0.5])
    same = ot_frontier_linear(P, P, LINE, 1e-3, grid_size=10)
    assert np.all(same.x < 1e-6) and np.all(same.y < 1e-6)
    far = ot_frontier_linear([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], LINE, 0.05, grid_size=20)
    assert np.all(np.diff(far.x) <= 1e-9)
    assert np.all(np.diff(far.y) >= -1e-9)
    assert 0.0 <= mauve_score(far, 1.0) <= 1.0


def test_ot_scores_orders_separation():
    rng = np.random.default_rng(0)
    near = ot_scores(rng.normal(size=(300, 2)), rng.normal(size=(300, 2)), k=10, grid_size=10)
    far = ot_scores(rng.normal(size=(300, 2)), rng.normal(size=(300, 2)) + 3, k=10, grid_size=10)
    assert near.mauve > far.mauve
    assert far.divergence == "sq_euclidean_ot"
    assert far.params["ot_cost"] > near.params["ot_cost"]
