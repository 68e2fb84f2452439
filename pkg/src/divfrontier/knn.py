"""Nearest-neighbour and kernel density ratio estimators, plus the shared PCA step."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from . import _backend
from .frontier import ScoreReport, curve_from_ratios, curve_scores
from .generators import DivergenceGenerator, interpolate_generator
from .quantization import check_embeddings

__all__ = [
    "KnnConfig",
    "PCAModel",
    "fit_pca",
    "pca_reduce",
    "knn_counts",
    "knn_likelihood_ratios",
    "knn_f_divergence",
    "knn_frontier",
    "knn_scores",
    "kde_likelihood_ratios",
    "kde_scores",
]

DEFAULT_PCA_DIMS = 25
_MAX_LOG_RATIO = 700.0


@dataclass
class KnnConfig:
    k_neighbors: Optional[int] = None  # None: ceil(n ** (1/3)) with n = len(X)
    pca_dims: Optional[int] = None  # None: min(25, d, n + m)
    noise_sigma: float = 0.0
    seed: int = 0


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # (dims, d)
    explained_variance: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T


def fit_pca(joint, dims: int) -> PCAModel:
    X = check_embeddings(joint, "joint embeddings")
    n, d = X.shape
    dims = int(dims)
    if not 1 <= dims <= min(d, n):
        raise ValueError(f"pca dims must be in [1, {min(d, n)}], got {dims}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:dims].copy()
    # sign convention: the largest-magnitude loading of each component is positive
    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(dims), pivot])
    signs[signs == 0] = 1.0
    comps *= signs[:, None]
    var = s[:dims] ** 2 / max(n - 1, 1)
    return PCAModel(mean, comps, var)


def pca_reduce(joint, dims: int) -> np.ndarray:
    """Project onto the top principal directions of ``joint``."""
    model = fit_pca(joint, dims)
    return model.transform(joint)


def _resolve_dims(requested: Optional[int], d: int, total: int) -> int:
    if requested is None:
        return min(DEFAULT_PCA_DIMS, d, total)
    return int(requested)


def _prepare(X, Y, pca_dims, noise_sigma=0.0, seed=0):
    X = check_embeddings(X, "X")
    Y = check_embeddings(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    joint = np.vstack([X, Y])
    if noise_sigma:
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        joint = joint + np.random.default_rng(seed).normal(scale=noise_sigma, size=joint.shape)
    dims = _resolve_dims(pca_dims, joint.shape[1], joint.shape[0])
    Z = pca_reduce(joint, dims)
    return np.ascontiguousarray(Z[: len(X)]), np.ascontiguousarray(Z[len(X):]), dims


def knn_counts(X, Y, k: int):
    """Counts of X-rows and Y-rows among each point's k nearest neighbours.

    Points are the rows of X followed by the rows of Y; a point is never its
    own neighbour and equal distances are resolved by the lower row index.
    """
    X = check_embeddings(X, "X")
    Y = check_embeddings(Y, "Y")
    Z = np.vstack([X, Y])
    nbrs = _backend.knn_indices(Z, int(k))
    cx = (nbrs < len(X)).sum(axis=1)
    return cx, int(k) - cx


def _ratios(num, n_num, den, n_den):
    den = np.where(den == 0, 0.5, den).astype(float)
    return (num / n_num) / (den / n_den)


def knn_likelihood_ratios(X, Y, k: int) -> np.ndarray:
    """Estimates of ``P/Q`` at every point of ``X`` then ``Y``; zero Y-counts count as 1/2."""
    n, m = len(X), len(Y)
    cx, cy = knn_counts(X, Y, k)
    return _ratios(cx, n, cy, m)


def knn_f_divergence(X, Y, f: DivergenceGenerator, k: int) -> float:
    """Plug-in ``D_f(P || Q)`` averaged over the Y sample."""
    n = len(X)
    r = knn_likelihood_ratios(X, Y, k)[n:]
    return max(float(np.mean(f(r))), 0.0)


def _frontier_ratios(X, Y, k):
    n, m = len(X), len(Y)
    cx, cy = knn_counts(X, Y, k)
    on_q = _ratios(cx[n:], n, cy[n:], m)
    on_p = _ratios(cy[:n], m, cx[:n], n)
    return on_q, on_p


def knn_frontier(X, Y, f: DivergenceGenerator, k: int, grid_size: int = 100):
    on_q, on_p = _frontier_ratios(X, Y, k)
    return curve_from_ratios(on_q, on_p, f, grid_size)


def knn_scores(X, Y, f: DivergenceGenerator, config: Optional[KnnConfig] = None,
               c: float = 10.0, grid_size: int = 100) -> ScoreReport:
    config = config or KnnConfig()
    Zx, Zy, dims = _prepare(X, Y, config.pca_dims, config.noise_sigma, config.seed)
    total = len(Zx) + len(Zy)
    k = config.k_neighbors if config.k_neighbors is not None else math.ceil(len(Zx) ** (1.0 / 3.0) - 1e-12)
    if not 1 <= k < total:
        raise ValueError(f"k_neighbors must be in [1, {total - 1}], got {k}")
    on_q, on_p = _frontier_ratios(Zx, Zy, k)
    curve = curve_from_ratios(on_q, on_p, f, grid_size)
    half = interpolate_generator(f, 0.5)
    mid = 0.5 * max(float(np.mean(half(on_q))), 0.0) + 0.5 * max(float(np.mean(half(on_p))), 0.0)
    params = {"k_neighbors": int(k), "pca_dims": int(dims), "noise_sigma": float(config.noise_sigma),
              "seed": int(config.seed)}
    return curve_scores(curve, mid, f.label, c, "knn", params)


def _log_kernel_means(A, B, h, leave_one_out=False):
    """``log mean_j K_h(a_i - b_j)`` for a Gaussian kernel, up to the shared normalizer."""
    d2 = cdist(A, B, "sqeuclidean")
    logk = -0.5 * d2 / (h * h)
    count = B.shape[0]
    if leave_one_out:
        np.fill_diagonal(logk, -np.inf)
        count -= 1
    return logsumexp(logk, axis=1) - math.log(count)


def _check_bandwidth(bandwidth):
    if not (bandwidth > 0 and math.isfinite(bandwidth)):
        raise ValueError("bandwidth must be a positive finite number")


def kde_likelihood_ratios(X, Y, bandwidth: float) -> np.ndarray:
    """Kernel estimates of ``P/Q`` at each row of Y.

    The numerator averages over all of X; the denominator leaves the
    evaluation point out, so it averages over the other ``m - 1`` rows of Y.
    """
    _check_bandwidth(bandwidth)
    X = check_embeddings(X, "X")
    Y = check_embeddings(Y, "Y")
    if len(Y) < 2:
        raise ValueError("the kernel ratio needs at least two Y points")
    log_r = _log_kernel_means(Y, X, bandwidth) - _log_kernel_means(Y, Y, bandwidth, leave_one_out=True)
    # an isolated Y point can have an underflowing denominator; keep the ratio finite
    return np.exp(np.minimum(log_r, _MAX_LOG_RATIO))


def kde_scores(X, Y, f: DivergenceGenerator, bandwidth: float, pca_dims: Optional[int] = None,
               c: float = 10.0, grid_size: int = 100) -> ScoreReport:
    _check_bandwidth(bandwidth)
    Zx, Zy, dims = _prepare(X, Y, pca_dims)
    on_q = kde_likelihood_ratios(Zx, Zy, bandwidth)
    on_p = kde_likelihood_ratios(Zy, Zx, bandwidth)
    curve = curve_from_ratios(on_q, on_p, f, grid_size)
    half = interpolate_generator(f, 0.5)
    mid = 0.5 * max(float(np.mean(half(on_q))), 0.0) + 0.5 * max(float(np.mean(half(on_p))), 0.0)
    return curve_scores(curve, mid, f.label, c, "kde", {"bandwidth": float(bandwidth), "pca_dims": int(dims)})
