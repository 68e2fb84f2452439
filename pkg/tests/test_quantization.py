import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divfrontier.frontier import frontier_integral
from divfrontier.generators import f_divergence, make_generator
from divfrontier.quantization import (
    Smoothing,
    alpha_n,
    assign_and_count,
    beta_n_exact,
    beta_n_mc,
    count_assignments,
    kmeans_fit,
    merge_bins,
    oracle_level_set_partition,
    quantized_scores,
    smooth_counts,
)
from divfrontier.simulation import SyntheticSpec, make_distribution

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def sse(X, labels):
    return sum(float(np.sum((X[labels == g] - X[labels == g].mean(axis=0)) ** 2)) for g in np.unique(labels))


def best_two_partition_sse(X):
    best = math.inf
    n = len(X)
    for mask in itertools.product([0, 1], repeat=n):
        labels = np.array(mask)
        if 0 < labels.sum() < n:
            best = min(best, sse(X, labels))
    return best


def model_sse(model, X):
    return sse(X, model.predict(X))


def test_kmeans_k_equals_n(rng):
    X = rng.normal(size=(12, 3))
    model = kmeans_fit(X, 12, seed=1)
    assert model_sse(model, X) == 0.0
    assert model.converged


def test_kmeans_k_one_is_mean(rng):
    X = rng.normal(size=(50, 4))
    model = kmeans_fit(X, 1, seed=3)
    np.testing.assert_allclose(model.centers[0], X.mean(axis=0), rtol=1e-12)


def test_unit_square_restarts_reach_the_optimum():
    assert best_two_partition_sse(SQUARE) == pytest.approx(1.0)
    for seed in range(10):
        model = kmeans_fit(SQUARE, 2, seed=seed, n_init=10)
        assert model_sse(model, SQUARE) == pytest.approx(1.0)


def test_unit_square_single_start_fixpoints():
    # one k-means++ start can land on a diagonal pair of corners, whose Lloyd fixpoint has SSE 4/3
    seen = {round(model_sse(kmeans_fit(SQUARE, 2, seed=s), SQUARE), 9) for s in range(40)}
    assert seen <= {1.0, round(4 / 3, 9)}
    assert 1.0 in seen


def test_kmeans_errors(rng):
    X = rng.normal(size=(5, 2))
    with pytest.raises(ValueError):
        kmeans_fit(X, 6)
    with pytest.raises(ValueError):
        kmeans_fit(X, 0)
    with pytest.raises(ValueError):
        kmeans_fit(X, 2, max_iters=0)
    with pytest.raises(ValueError):
        kmeans_fit(np.array([[np.nan, 1.0]]), 1)


def test_kmeans_deterministic_and_monotone(rng):
    X = rng.normal(size=(400, 3))
    a = kmeans_fit(X, 15, seed=7)
    b = kmeans_fit(X, 15, seed=7)
    np.testing.assert_array_equal(a.centers, b.centers)
    assert np.all(np.diff(a.inertia_history) <= 1e-9)
    np.testing.assert_array_equal(count_assignments(a, X), count_assignments(b, X))


def test_predict_dimension_mismatch(rng):
    model = kmeans_fit(rng.normal(size=(10, 2)), 2)
    with pytest.raises(ValueError):
        model.predict(rng.normal(size=(3, 3)))


def test_smoothing_examples():
    np.testing.assert_allclose(smooth_counts([2, 2, 0], "krichevsky_trofimov"), np.array([2.5, 2.5, 0.5]) / 5.5)
    np.testing.assert_allclose(smooth_counts([2, 2, 0], "laplace"), np.array([3, 3, 1]) / 7)
    np.testing.assert_allclose(smooth_counts([2, 1, 0], "good_turing"), [0.25, 0.5, 0.25])
    np.testing.assert_allclose(smooth_counts([2, 1, 0], "braess_sauer"), np.array([2.75, 2.0, 0.5]) / 5.25)
    np.testing.assert_allclose(smooth_counts([2, 1, 0], "none"), [2 / 3, 1 / 3, 0])


def test_smoothing_parse_and_errors():
    assert Smoothing.parse("kt") is Smoothing.KT
    assert Smoothing.parse("empirical") is Smoothing.NONE
    with pytest.raises(ValueError):
        Smoothing.parse("witten_bell")
    with pytest.raises(ValueError):
        smooth_counts([1.5, 2])
    with pytest.raises(ValueError):
        smooth_counts([0, 0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=20).filter(lambda c: sum(c) > 0),
       st.sampled_from(list(Smoothing)))
def test_smoothed_histograms_are_distributions(counts, scheme):
    h = smooth_counts(counts, scheme)
    assert h.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(h >= 0)
    if scheme in (Smoothing.LAPLACE, Smoothing.KT, Smoothing.BRAESS_SAUER):
        assert np.all(h > 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=20).filter(lambda c: sum(c) > 0),
       st.sampled_from([0.5, 1.0]))
def test_add_constant_inverts_to_counts(counts, b):
    scheme = "krichevsky_trofimov" if b == 0.5 else "laplace"
    h = smooth_counts(counts, scheme)
    n, k = sum(counts), len(counts)
    np.testing.assert_allclose(h * (n + k * b) - b, counts, atol=1e-9)


def test_assign_and_count_sums(rng):
    X = rng.normal(size=(100, 2))
    Y = rng.normal(size=(80, 2)) + 1
    model = kmeans_fit(np.vstack([X, Y]), 8)
    P, Q = assign_and_count(model, X, Y, "kt")
    assert P.sum() == pytest.approx(1.0) and Q.sum() == pytest.approx(1.0)
    assert np.all(P > 0) and np.all(Q > 0)


def test_quantized_scores_identical_inputs(rng):
    X = rng.normal(size=(300, 3))
    rep = quantized_scores(X, X.copy(), make_generator("kl"), k=20, smoothing="none")
    assert (rep.mauve, rep.fi, rep.mid) == (1.0, 0.0, 0.0)


def test_quantized_scores_separated_and_smoothing_ordering():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 2)) + 10
    Y = rng.normal(size=(500, 2)) - 10
    kl = make_generator("kl")
    kt = quantized_scores(X, Y, kl, k=10, smoothing="kt")
    raw = quantized_scores(X, Y, kl, k=10, smoothing="none")
    assert kt.mauve < 0.1
    assert kt.mauve > raw.mauve
    assert any("empty bins" in w for w in raw.warnings)


def test_quantized_scores_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        quantized_scores(rng.normal(size=(5, 2)), rng.normal(size=(5, 3)), make_generator("kl"), k=2)


@pytest.mark.parametrize("name,k,bound", [("js", 5, math.log(2) / 5), ("fi_kl", 10, 0.1)])
def test_oracle_partition_examples(rng, name, k, bound):
    f = make_generator(name)
    P, Q = rng.dirichlet(np.ones(200)), rng.dirichlet(np.ones(200))
    labels = oracle_level_set_partition(P, Q, f, k)
    assert labels.min() >= 0 and labels.max() < 2 * k
    err = abs(f_divergence(P, Q, f) - f_divergence(merge_bins(P, labels, 2 * k), merge_bins(Q, labels, 2 * k), f))
    assert err <= bound


def test_oracle_partition_fine_grid_is_nearly_exact(rng):
    f = make_generator("js")
    P, Q = rng.dirichlet(np.ones(20)), rng.dirichlet(np.ones(20))
    labels = oracle_level_set_partition(P, Q, f, 10**7)
    err = abs(f_divergence(P, Q, f) - f_divergence(merge_bins(P, labels), merge_bins(Q, labels), f))
    assert err < 1e-6


def test_oracle_partition_rejects_unbounded():
    with pytest.raises(ValueError):
        oracle_level_set_partition([0.5, 0.5], [0.3, 0.7], make_generator("kl"), 3)


def test_alpha_n_uniform():
    for k, n in [(4, 10), (100, 1000)]:
        assert alpha_n(np.full(k, 1 / k), n) == pytest.approx(math.sqrt(k / n), rel=1e-12)


def test_beta_n_examples():
    assert beta_n_mc([1.0, 0.0, 0.0], 1) == 0.0
    assert beta_n_exact([1.0, 0.0], 5) == 0.0
    P = np.full(100, 0.01)
    mean, se = beta_n_mc(P, 1000, reps=200, seed=0, return_stderr=True)
    assert mean <= 100 * math.log(1000) / 1000 + 3 * se
    # the exact expectation is sum_l (1 - p_l)^n p_l max(1, log 1/p_l); at n=300 misses are common
    mean, se = beta_n_mc(P, 300, reps=400, seed=1, return_stderr=True)
    assert se > 0
    assert mean == pytest.approx(beta_n_exact(P, 300), abs=4 * se)


def test_fi_error_shrinks_with_n():
    P = make_distribution(SyntheticSpec("zipf", 1.0, 100))
    rng = np.random.default_rng(2024)

    def mean_err(n):
        errs = []
        for _ in range(50):
            a = smooth_counts(rng.multinomial(n, P), "none")
            b = smooth_counts(rng.multinomial(n, P), "none")
            errs.append(frontier_integral(a, b))
        return np.mean(errs)

    assert mean_err(4000) < mean_err(1000)
