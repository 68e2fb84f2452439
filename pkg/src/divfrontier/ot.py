"""Entropic optimal transport between quantized histograms.

Sinkhorn iterations run in the log domain with epsilon scaling: the
regularization starts large and is divided down to its target, each stage
warm-started from the previous dual potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .frontier import FrontierCurve, ScoreReport, curve_scores, lambda_grid
from .generators import as_histogram, mix
from .quantization import Smoothing, check_embeddings, count_assignments, kmeans_fit, smooth_counts

__all__ = ["SinkhornConvergenceError", "SinkhornResult", "cost_matrix", "default_epsilon",
           "sinkhorn", "sinkhorn_ot", "ot_frontier_linear", "ot_scores"]


class SinkhornConvergenceError(FloatingPointError):
    def __init__(self, violation: float, iterations: int):
        super().__init__(f"Sinkhorn did not converge after {iterations} iterations "
                         f"(marginal violation {violation:.3g})")
        self.violation = violation
        self.iterations = iterations


@dataclass
class SinkhornResult:
    cost: float
    plan: np.ndarray
    violation: float
    iterations: int
    epsilon: float


def cost_matrix(centers) -> np.ndarray:
    """Squared Euclidean distances between quantization centers."""
    C = np.asarray(centers, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    diff = C[:, None, :] - C[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def default_epsilon(C) -> float:
    """5% of the median off-diagonal cost (1.0 when there is none)."""
    C = np.asarray(C, dtype=float)
    off = C[~np.eye(C.shape[0], dtype=bool)] if C.shape[0] == C.shape[1] else C.ravel()
    med = float(np.median(off)) if off.size else 0.0
    return 0.05 * med if med > 0 else 1.0


def _check_cost(C, shape):
    C = np.asarray(C, dtype=float)
    if C.shape != shape:
        raise ValueError(f"cost matrix shape {C.shape} does not match histograms {shape}")
    if not np.all(np.isfinite(C)) or np.any(C < 0):
        raise ValueError("cost matrix must be finite and nonnegative")
    return C


# scalings beyond exp(+-_ABSORB) are folded back into the dual potentials
_ABSORB = 30.0
_CHECK_EVERY = 5


def _log_sweep(f, g, Cs, log_a, log_b, eps):
    f = eps * log_a - eps * logsumexp((g[None, :] - Cs) / eps, axis=1)
    g = eps * log_b - eps * logsumexp((f[:, None] - Cs) / eps, axis=0)
    return f, g


def _stage(f, g, Cs, a, b, log_a, log_b, eps, tol, max_iters, total):
    """Sinkhorn at a fixed epsilon: scaling updates on a kernel stabilized by the potentials."""
    violation = math.inf
    while total < max_iters:
        # an exact log-domain sweep leaves every row and column of K with mass
        f, g = _log_sweep(f, g, Cs, log_a, log_b, eps)
        total += 1
        K = np.exp((f[:, None] + g[None, :] - Cs) / eps)
        u = np.ones_like(a)
        v = np.ones_like(b)
        while total < max_iters:
            Kv = K @ v
            if total % _CHECK_EVERY == 0:
                violation = float(np.abs(u * Kv - a).sum())
                if violation < tol:
                    return f + eps * np.log(u), g + eps * np.log(v), total, violation
            with np.errstate(divide="ignore", over="ignore"):
                u = a / Kv
                v = b / (K.T @ u)
            total += 1
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and u.min() > 0 and v.min() > 0):
                break  # restart from the last good potentials
            lu, lv = np.log(u), np.log(v)
            if max(np.abs(lu).max(), np.abs(lv).max()) > _ABSORB:
                f, g = f + eps * lu, g + eps * lv
                break
    return f, g, total, violation


def sinkhorn(P, Q, C, epsilon: Optional[float] = None, tol: float = 1e-9,
             max_iters: int = 100_000, scaling: float = 0.5) -> SinkhornResult:
    """Entropic transport plan between histograms ``P`` and ``Q``.

    Bins with zero mass are dropped before iterating and reinserted as zero
    rows or columns of the plan. ``tol`` bounds the L1 violation of the row
    marginals (the column marginals are matched exactly after each sweep).
    """
    p = as_histogram(P, "P")
    q = as_histogram(Q, "Q")
    C = _check_cost(C, (p.size, q.size))
    eps_target = default_epsilon(C) if epsilon is None else float(epsilon)
    if not eps_target > 0:
        raise ValueError("epsilon must be positive")
    rows, cols = np.flatnonzero(p > 0), np.flatnonzero(q > 0)
    a, b = p[rows], q[cols]
    Cs = C[np.ix_(rows, cols)]
    log_a, log_b = np.log(a), np.log(b)

    eps = max(eps_target, float(Cs.max()))
    f = np.zeros(a.size)
    g = np.zeros(b.size)
    total = 0
    violation = math.inf
    while True:
        final = eps <= eps_target
        stage_tol = tol if final else max(tol, 1e-3)
        f, g, total, violation = _stage(f, g, Cs, a, b, log_a, log_b, eps, stage_tol, max_iters, total)
        if violation >= stage_tol:
            raise SinkhornConvergenceError(violation, total)
        if final:
            break
        eps = max(eps * scaling, eps_target)

    plan_small = np.exp((f[:, None] + g[None, :] - Cs) / eps)
    plan = np.zeros((p.size, q.size))
    plan[np.ix_(rows, cols)] = plan_small
    return SinkhornResult(float(np.sum(plan_small * Cs)), plan, violation, total, eps)


def sinkhorn_ot(P, Q, C, epsilon: Optional[float] = None, **kwargs) -> float:
    """Transport cost ``<plan, C>`` of the entropic plan (the entropy term is not included)."""
    return sinkhorn(P, Q, C, epsilon, **kwargs).cost


def ot_frontier_linear(P, Q, C, epsilon: Optional[float] = None, grid_size: int = 100,
                       **kwargs) -> FrontierCurve:
    """``(OT(P, R_lam), OT(Q, R_lam))`` over the lambda grid."""
    p = as_histogram(P, "P")
    q = as_histogram(Q, "Q")
    C = _check_cost(C, (p.size, q.size))
    if p.size != q.size:
        raise ValueError("P and Q must live on the same bins")
    eps = default_epsilon(C) if epsilon is None else epsilon
    lams = lambda_grid(grid_size)
    xs = np.empty_like(lams)
    ys = np.empty_like(lams)
    for i, lam in enumerate(lams):
        r = mix(lam, p, q)
        r = r / r.sum()
        xs[i] = sinkhorn_ot(p, r, C, eps, **kwargs)
        ys[i] = sinkhorn_ot(q, r, C, eps, **kwargs)
    return FrontierCurve(lams, xs, ys, int(grid_size))


def ot_scores(X, Y, k: int = 50, smoothing=Smoothing.KT, epsilon: Optional[float] = None,
              c: float = 1.0, grid_size: int = 100, seed: int = 0, max_iters: int = 300) -> ScoreReport:
    X = check_embeddings(X, "X")
    Y = check_embeddings(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    smoothing = Smoothing.parse(smoothing)
    model = kmeans_fit(np.vstack([X, Y]), k, seed=seed, max_iters=max_iters)
    P = smooth_counts(count_assignments(model, X), smoothing)
    Q = smooth_counts(count_assignments(model, Y), smoothing)
    C = cost_matrix(model.centers)
    eps = default_epsilon(C) if epsilon is None else float(epsilon)
    curve = ot_frontier_linear(P, Q, C, eps, grid_size)
    half = mix(0.5, P, Q)
    mid = 0.5 * sinkhorn_ot(P, half, C, eps) + 0.5 * sinkhorn_ot(Q, half, C, eps)
    params = {"k": model.k, "smoothing": smoothing.value, "epsilon": eps, "seed": int(seed),
              "ot_cost": sinkhorn_ot(P, Q, C, eps)}
    return curve_scores(curve, mid, "sq_euclidean_ot", c, "ot", params)
