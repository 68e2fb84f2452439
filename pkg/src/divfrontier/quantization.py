"""Vector quantization of embeddings into histograms, plus smoothing.

k-means is fit on the union of both samples; each sample is then binned by
nearest center and the counts are turned into probability vectors with one of
the smoothing schemes in :class:`Smoothing`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _backend
from .frontier import ScoreReport, histogram_scores
from .generators import DivergenceGenerator, as_histogram

__all__ = [
    "QuantizationModel",
    "Smoothing",
    "kmeans_fit",
    "count_assignments",
    "smooth_counts",
    "assign_and_count",
    "quantized_scores",
    "oracle_level_set_partition",
    "merge_bins",
    "alpha_n",
    "beta_n_exact",
    "beta_n_mc",
    "check_embeddings",
]


class Smoothing(str, Enum):
    NONE = "none"
    LAPLACE = "laplace"
    KT = "krichevsky_trofimov"
    BRAESS_SAUER = "braess_sauer"
    GOOD_TURING = "good_turing"

    @classmethod
    def parse(cls, value) -> "Smoothing":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"empirical": "none", "kt": "krichevsky_trofimov", "add_half": "krichevsky_trofimov",
                   "add_one": "laplace", "bs": "braess_sauer", "gt": "good_turing"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown smoothing {value!r}; expected one of {names}") from None


@dataclass
class QuantizationModel:
    centers: np.ndarray
    seed: int
    iterations_run: int
    inertia_history: list = field(default_factory=list)
    converged: bool = True

    @property
    def k(self) -> int:
        return int(self.centers.shape[0])

    def predict(self, X) -> np.ndarray:
        X = check_embeddings(X, "X")
        if X.shape[1] != self.centers.shape[1]:
            raise ValueError(f"dimension mismatch: model has {self.centers.shape[1]}, data has {X.shape[1]}")
        labels, _ = _backend.assign_labels(X, self.centers)
        return labels


def check_embeddings(X, name: str = "embeddings") -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return np.ascontiguousarray(arr)


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = np.zeros(n, dtype=bool)
    idx = int(rng.integers(n))
    chosen[idx] = True
    centers = [X[idx]]
    closest = np.sum((X - X[idx]) ** 2, axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            cum = np.cumsum(closest)
            idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            idx = min(idx, n - 1)
        else:
            # every point coincides with some center already
            idx = int(np.flatnonzero(~chosen)[0])
        chosen[idx] = True
        centers.append(X[idx])
        np.minimum(closest, np.sum((X - X[idx]) ** 2, axis=1), out=closest)
    return np.array(centers, dtype=np.float64)


def _lloyd(X, centers, max_iters):
    labels, d2 = _backend.assign_labels(X, centers)
    history = [float(d2.sum())]
    iters = 0
    for iters in range(1, max_iters + 1):
        centers, _ = _backend.update_centers(X, labels, centers)
        new_labels, d2 = _backend.assign_labels(X, centers)
        history.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            return centers, iters, history, True
        labels = new_labels
    return centers, iters, history, False


def kmeans_fit(joint, k: int, seed: int = 0, max_iters: int = 300, n_init: int = 1) -> QuantizationModel:
    """Lloyd's algorithm from k-means++ seeds, run to an assignment fixpoint.

    With ``n_init > 1`` the seeding is repeated from the same generator and
    the run with the lowest final within-cluster SSE is kept.
    """
    X = check_embeddings(joint, "joint embeddings")
    k = int(k)
    if k < 1:
        raise ValueError("k must be positive")
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds the number of points ({X.shape[0]})")
    if max_iters < 1 or n_init < 1:
        raise ValueError("max_iters and n_init must be positive")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(X, _kmeanspp(X, k, rng), max_iters)
        if best is None or run[2][-1] < best[2][-1]:
            best = run
    centers, iters, history, converged = best
    return QuantizationModel(centers, int(seed), iters, history, converged)


def count_assignments(model: QuantizationModel, X) -> np.ndarray:
    return np.bincount(model.predict(X), minlength=model.k)


def _good_turing(counts: np.ndarray) -> np.ndarray:
    counts = counts.astype(np.int64)
    phi = np.bincount(counts, minlength=counts.max() + 2).astype(float)
    w = counts.astype(float)
    nxt = phi[counts + 1]
    # raw counts where they dominate the next frequency-of-frequency, else the GT estimate
    use_gt = counts <= nxt
    cl = counts[use_gt]
    w[use_gt] = (phi[cl + 1] + 1.0) * (cl + 1.0) / phi[cl]
    return w / w.sum()


def smooth_counts(counts, scheme=Smoothing.KT) -> np.ndarray:
    """Turn a count vector into a probability vector."""
    scheme = Smoothing.parse(scheme)
    c = np.asarray(counts)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("counts must be a nonempty 1-D vector")
    if np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
        raise ValueError("counts must be nonnegative integers")
    c = c.astype(float)
    n = c.sum()
    if n == 0:
        raise ValueError("cannot smooth an empty sample")
    if scheme is Smoothing.NONE:
        return c / n
    if scheme is Smoothing.LAPLACE:
        b = np.ones_like(c)
    elif scheme is Smoothing.KT:
        b = np.full_like(c, 0.5)
    elif scheme is Smoothing.BRAESS_SAUER:
        b = np.where(c == 0, 0.5, np.where(c == 1, 1.0, 0.75))
    else:
        return _good_turing(c)
    return (c + b) / (n + b.sum())


def assign_and_count(model: QuantizationModel, X, Y, smoothing=Smoothing.KT):
    """Quantized histograms ``(P_hat, Q_hat)`` of the two samples."""
    P = smooth_counts(count_assignments(model, X), smoothing)
    Q = smooth_counts(count_assignments(model, Y), smoothing)
    return P, Q


def quantized_scores(X, Y, f: DivergenceGenerator, k: int = 500, smoothing=Smoothing.KT,
                     c: float = 5.0, grid_size: int = 100, seed: int = 0,
                     max_iters: int = 300) -> ScoreReport:
    X = check_embeddings(X, "X")
    Y = check_embeddings(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    smoothing = Smoothing.parse(smoothing)
    model = kmeans_fit(np.vstack([X, Y]), k, seed=seed, max_iters=max_iters)
    cx = count_assignments(model, X)
    cy = count_assignments(model, Y)
    warnings = []
    if not model.converged:
        warnings.append(f"k-means stopped after {max_iters} iterations without reaching a fixpoint")
    ex, ey = int((cx == 0).sum()), int((cy == 0).sum())
    if ex or ey:
        warnings.append(f"empty bins: {ex}/{model.k} for P, {ey}/{model.k} for Q")
    P = smooth_counts(cx, smoothing)
    Q = smooth_counts(cy, smoothing)
    params = {"k": model.k, "smoothing": smoothing.value, "seed": int(seed),
              "kmeans_iterations": model.iterations_run}
    return histogram_scores(P, Q, f, c=c, grid_size=grid_size, estimator="quantize",
                            params=params, warnings=warnings)


def oracle_level_set_partition(P, Q, f: DivergenceGenerator, k: int) -> np.ndarray:
    """Group labels in ``[0, 2k)`` that merge bins by level sets of ``f`` and ``f*``.

    Bins with ``P <= Q`` are grouped by ``f(P/Q)`` on a k-step grid of
    ``[0, f(0)]``; the remaining bins by ``f*(Q/P)`` on a grid of ``[0, f*(0)]``.
    Merging bins this way changes ``D_f`` by at most ``(f(0) + f*(0)) / k``.
    """
    p = as_histogram(P, "P")
    q = as_histogram(Q, "Q")
    k = int(k)
    if k < 1:
        raise ValueError("k must be positive")
    if not (math.isfinite(f.f_at_zero) and math.isfinite(f.fstar_at_zero)):
        raise ValueError(f"{f.label!r} has an infinite limit at zero; the partition needs finite f(0) and f*(0)")
    labels = np.zeros(p.shape, dtype=np.int64)
    low = (p <= q) & (q > 0)
    high = p > q
    if np.any(low):
        vals = np.asarray(f(p[low] / q[low]), dtype=float)
        g = np.floor(vals * k / f.f_at_zero) if f.f_at_zero > 0 else np.zeros_like(vals)
        labels[low] = np.clip(g, 0, k - 1).astype(np.int64)
    if np.any(high):
        ph, qh = p[high], q[high]
        vals = np.full(ph.shape, f.fstar_at_zero)
        seen = qh > 0
        # f*(q/p) = (q/p) f(p/q)
        vals[seen] = (qh[seen] / ph[seen]) * np.asarray(f(ph[seen] / qh[seen]), dtype=float)
        g = np.floor(vals * k / f.fstar_at_zero) if f.fstar_at_zero > 0 else np.zeros_like(vals)
        labels[high] = k + np.clip(g, 0, k - 1).astype(np.int64)
    return labels


def merge_bins(P, labels, num_groups: Optional[int] = None) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    size = int(labels.max()) + 1 if num_groups is None else int(num_groups)
    return np.bincount(labels, weights=np.asarray(P, dtype=float), minlength=size)


def alpha_n(P, n: int) -> float:
    """``sum_l sqrt(P_l / n)``."""
    p = as_histogram(P, "P")
    if n < 1:
        raise ValueError("n must be positive")
    return float(np.sqrt(p / n).sum())


def _missing_weight(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return p * np.maximum(1.0, np.log(1.0 / p))


def beta_n_exact(P, n: int) -> float:
    """Expected ``sum over unseen l of P_l max(1, log 1/P_l)`` after n draws."""
    p = as_histogram(P, "P")
    pos = p > 0
    with np.errstate(divide="ignore"):
        # a bin with p = 1 can never be missed: log1p(-1) = -inf gives exp(-inf) = 0
        miss = np.exp(n * np.log1p(-p[pos]))
    return float(np.sum(miss * _missing_weight(p[pos])))


def beta_n_mc(P, n: int, reps: int = 200, seed: int = 0, return_stderr: bool = False):
    """Monte Carlo estimate of the same missing-mass quantity as :func:`beta_n_exact`."""
    p = as_histogram(P, "P")
    if n < 1 or reps < 1:
        raise ValueError("n and reps must be positive")
    rng = np.random.default_rng(seed)
    weight = np.zeros_like(p)
    pos = p > 0
    weight[pos] = _missing_weight(p[pos])
    counts = rng.multinomial(n, p, size=reps)
    vals = ((counts == 0) * weight).sum(axis=1)
    mean = float(vals.mean())
    if return_stderr:
        se = float(vals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        return mean, se
    return mean
