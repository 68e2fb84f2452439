"""Gaussian fits and Monte Carlo f-divergences between them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .frontier import FrontierCurve, ScoreReport, curve_scores, lambda_grid
from .generators import DivergenceGenerator
from .knn import _prepare
from .quantization import check_embeddings

__all__ = ["GaussianFit", "fit_gaussian", "gaussian_f_divergence_mc", "gaussian_frontier",
           "gaussian_scores"]

# log ratios are clipped here before exponentiation
_LOG_RATIO_CAP = 700.0


@dataclass
class GaussianFit:
    mean: np.ndarray
    covariance: np.ndarray
    jitter: float = 0.0

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        d = self.mean.shape[0]
        if self.covariance.shape != (d, d):
            raise ValueError("covariance shape does not match the mean")
        self._chol = np.linalg.cholesky(self.covariance)
        self._log_norm = float(np.log(np.diag(self._chol)).sum() + 0.5 * d * math.log(2.0 * math.pi))

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def logpdf(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float).reshape(-1, self.dim)
        u = solve_triangular(self._chol, (Z - self.mean).T, lower=True)
        return -0.5 * np.sum(u * u, axis=0) - self._log_norm

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + rng.standard_normal((size, self.dim)) @ self._chol.T


def fit_gaussian(X) -> GaussianFit:
    """Sample mean and covariance (denominator n - 1), regularized if near singular."""
    X = check_embeddings(X, "X")
    n, d = X.shape
    if n < 2:
        raise ValueError("a Gaussian fit needs at least two points")
    mean = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1).reshape(d, d)
    jitter = 0.0
    if np.linalg.eigvalsh(cov).min() < 1e-10:
        scale = np.trace(cov) / d
        # a sample of identical points has zero trace; fall back to an absolute jitter
        jitter = 1e-8 * scale if scale > 0 else 1e-8
        cov = cov + jitter * np.eye(d)
    return GaussianFit(mean, cov, jitter)


def _f_of_log_ratio(f: DivergenceGenerator, log_ratio: np.ndarray) -> np.ndarray:
    return f(np.exp(np.minimum(log_ratio, _LOG_RATIO_CAP)))


def gaussian_f_divergence_mc(A: GaussianFit, B: GaussianFit, f: DivergenceGenerator,
                             num_samples: int = 100_000, seed: int = 0, return_stderr: bool = False):
    """Monte Carlo ``D_f(A || B)`` from samples of B; clamped at zero."""
    if A.dim != B.dim:
        raise ValueError("Gaussian fits have different dimensions")
    num_samples = int(num_samples)
    if num_samples < 2:
        raise ValueError("num_samples must be at least 2")
    rng = np.random.default_rng(seed)
    z = B.sample(num_samples, rng)
    vals = _f_of_log_ratio(f, A.logpdf(z) - B.logpdf(z))
    est = max(float(np.mean(vals)), 0.0)
    if return_stderr:
        return est, float(np.std(vals, ddof=1) / math.sqrt(num_samples))
    return est


def gaussian_frontier(A: GaussianFit, B: GaussianFit, f: DivergenceGenerator,
                      lambdas, num_samples: int = 100_000, seed: int = 0):
    """Frontier coordinates and their standard errors at the given lambdas.

    Samples from each mixture ``lam A + (1-lam) B`` are drawn as the first
    ``Binomial(num_samples, lam)`` rows of a fixed pool from A plus the rest
    from a fixed pool from B, so neighbouring lambdas share random numbers.
    Returns ``(x, y, se_x, se_y)``.
    """
    if A.dim != B.dim:
        raise ValueError("Gaussian fits have different dimensions")
    lams = np.asarray(lambdas, dtype=float)
    num_samples = int(num_samples)
    rng = np.random.default_rng(seed)
    pool_a = A.sample(num_samples, rng)
    pool_b = B.sample(num_samples, rng)
    la = (A.logpdf(pool_a), A.logpdf(pool_b))
    lb = (B.logpdf(pool_a), B.logpdf(pool_b))
    counts = rng.binomial(num_samples, lams)
    out = np.zeros((4, len(lams)))
    for i, (lam, na) in enumerate(zip(lams, counts)):
        nb = num_samples - na
        log_a = np.concatenate([la[0][:na], la[1][:nb]])
        log_b = np.concatenate([lb[0][:na], lb[1][:nb]])
        log_r = np.logaddexp(math.log(lam) + log_a, math.log1p(-lam) + log_b)
        vx = _f_of_log_ratio(f, log_a - log_r)
        vy = _f_of_log_ratio(f, log_b - log_r)
        out[0, i] = max(float(vx.mean()), 0.0)
        out[1, i] = max(float(vy.mean()), 0.0)
        out[2, i] = float(vx.std(ddof=1) / math.sqrt(num_samples))
        out[3, i] = float(vy.std(ddof=1) / math.sqrt(num_samples))
    return out[0], out[1], out[2], out[3]


def _monotonicity_warnings(vals, se, should_increase: bool, label: str):
    # steps that move the wrong way
    diffs = -np.diff(vals) if should_increase else np.diff(vals)
    slack = 2.0 * np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
    bad = int(np.sum(diffs > slack))
    if bad:
        return [f"{label} coordinate breaks monotonicity beyond 2 standard errors at {bad} grid steps"]
    return []


def gaussian_scores(X, Y, f: DivergenceGenerator, pca_dims: Optional[int] = 10,
                    num_samples: int = 100_000, c: float = 1.0, grid_size: int = 100,
                    seed: int = 0) -> ScoreReport:
    X = check_embeddings(X, "X")
    dims = None if pca_dims is None else min(int(pca_dims), X.shape[1], len(X) + len(Y))
    Zx, Zy, dims = _prepare(X, Y, dims)
    A, B = fit_gaussian(Zx), fit_gaussian(Zy)
    lams = lambda_grid(grid_size)
    x, y, sx, sy = gaussian_frontier(A, B, f, lams, num_samples, seed)
    # x(lam) should fall as lam grows and y(lam) should rise
    warnings = _monotonicity_warnings(x, sx, False, "x") + _monotonicity_warnings(y, sy, True, "y")
    mx, my, _, _ = gaussian_frontier(A, B, f, [0.5], num_samples, seed)
    mid = 0.5 * mx[0] + 0.5 * my[0]
    curve = FrontierCurve(lams, x, y, int(grid_size))
    params = {"pca_dims": int(dims), "num_samples": int(num_samples), "seed": int(seed),
              "jitter": [A.jitter, B.jitter]}
    return curve_scores(curve, mid, f.label, c, "gaussian", params, warnings)
