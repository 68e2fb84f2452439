"""Divergence frontiers and their scalar summaries (MAUVE, FI, MID)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .generators import (
    DivergenceGenerator,
    _terms,
    as_histogram,
    conjugate,
    f_divergence,
    interpolate_generator,
    interpolated_divergences,
    make_generator,
)

__all__ = [
    "FrontierCurve",
    "ScoreReport",
    "lambda_grid",
    "build_frontier",
    "curve_from_ratios",
    "curve_from_split_samples",
    "mauve_score",
    "frontier_integral",
    "integrate_curve",
    "midpoint_score",
    "histogram_scores",
]

# closed-form FI generators, keyed by the frontier generator's name
_FI_CLOSED_FORM = {"kl": "fi_kl", "chi2": "fi_chi2"}


def lambda_grid(grid_size: int) -> np.ndarray:
    """Interior grid ``i / N`` for ``i = 1 .. N-1``."""
    grid_size = int(grid_size)
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    return np.arange(1, grid_size) / grid_size


@dataclass(frozen=True)
class FrontierCurve:
    lambdas: np.ndarray
    x: np.ndarray
    y: np.ndarray
    grid_size: int

    def __post_init__(self):
        if not (len(self.lambdas) == len(self.x) == len(self.y)):
            raise ValueError("frontier arrays must have equal length")

    def transformed(self, c: float):
        """Points ``(exp(-c x), exp(-c y))``; infinite coordinates map to 0."""
        with np.errstate(over="ignore"):
            return np.exp(-c * self.x), np.exp(-c * self.y)

    def to_rows(self, c: float):
        ex, ey = self.transformed(c)
        return list(zip(self.lambdas.tolist(), self.x.tolist(), self.y.tolist(), ex.tolist(), ey.tolist()))


@dataclass
class ScoreReport:
    mauve: float
    fi: float
    mid: float
    scale_c: float
    divergence: str
    estimator: str
    params: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    curve: Optional[FrontierCurve] = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mauve": self.mauve,
            "fi": self.fi,
            "mid": self.mid,
            "c": self.scale_c,
            "divergence": self.divergence,
            "estimator": self.estimator,
            "params": dict(self.params),
            "warnings": list(self.warnings),
        }


def _check_generator(f: DivergenceGenerator):
    if not f.frontier_ok:
        raise ValueError(f"generator {f.label!r} cannot be used to build a frontier")


def build_frontier(P, Q, f: DivergenceGenerator, grid_size: int = 100) -> FrontierCurve:
    """Exact frontier ``(D_f(P || R_lam), D_f(Q || R_lam))`` for histograms."""
    _check_generator(f)
    p = as_histogram(P, "P")
    q = as_histogram(Q, "Q")
    if p.shape != q.shape:
        raise ValueError(f"histogram shapes differ: {p.shape} vs {q.shape}")
    lams = lambda_grid(grid_size)
    # D_f(P || lam P + (1-lam) Q) = D_{f_lam}(P || Q), which stays exact when P == Q
    xs = np.maximum(interpolated_divergences(p, q, f, lams), 0.0)
    ys = np.maximum(interpolated_divergences(q, p, f, 1.0 - lams), 0.0)
    return FrontierCurve(lams, xs, ys, int(grid_size))


def curve_from_ratios(ratios_on_q, ratios_on_p, f: DivergenceGenerator, grid_size: int = 100) -> FrontierCurve:
    """Plug-in frontier from likelihood-ratio estimates.

    ``ratios_on_q`` holds estimates of ``P/Q`` at samples of ``Q``;
    ``ratios_on_p`` holds estimates of ``Q/P`` at samples of ``P``.
    Each coordinate is clamped at zero.
    """
    _check_generator(f)
    rq = np.asarray(ratios_on_q, dtype=float)
    rp = np.asarray(ratios_on_p, dtype=float)
    lams = lambda_grid(grid_size)
    xs = np.empty_like(lams)
    ys = np.empty_like(lams)
    for i, lam in enumerate(lams):
        xs[i] = max(float(np.mean(interpolate_generator(f, lam)(rq))), 0.0)
        ys[i] = max(float(np.mean(interpolate_generator(f, 1.0 - lam)(rp))), 0.0)
    return FrontierCurve(lams, xs, ys, int(grid_size))


def _split_coordinate(g: DivergenceGenerator, r_on_p, r_on_q) -> float:
    """``D_g(P || Q)`` with the region ``P > Q`` averaged over P samples and the rest over Q samples."""
    low_q = r_on_q <= 1.0
    high_p = r_on_p > 1.0
    from_q = np.where(low_q, g(r_on_q), 0.0)
    with np.errstate(divide="ignore"):
        inv = np.where(high_p, 1.0 / r_on_p, 1.0)
    from_p = np.where(high_p, conjugate(g)(inv), 0.0)
    return max(float(np.mean(from_q) + np.mean(from_p)), 0.0)


def curve_from_split_samples(ratios_on_p, ratios_on_q, f: DivergenceGenerator,
                             grid_size: int = 100) -> FrontierCurve:
    """Plug-in frontier from ``P/Q`` estimates at samples of both P and Q.

    Each coordinate is an integral over the space; the part where ``P > Q`` is
    averaged over the P sample through the conjugate generator and the part
    where ``P <= Q`` over the Q sample. Both integrands stay bounded by the
    generator's limits at zero, and mass that only one sample visits is
    still counted.
    """
    _check_generator(f)
    rp = np.asarray(ratios_on_p, dtype=float)
    rq = np.asarray(ratios_on_q, dtype=float)
    lams = lambda_grid(grid_size)
    xs = np.empty_like(lams)
    ys = np.empty_like(lams)
    for i, lam in enumerate(lams):
        xs[i] = _split_coordinate(interpolate_generator(f, lam), rp, rq)
        # D_f(Q || R_lam) = D_{f_{1-lam}}(Q || P): swap the roles, ratios become Q/P
        with np.errstate(divide="ignore"):
            ys[i] = _split_coordinate(interpolate_generator(f, 1.0 - lam), 1.0 / rq, 1.0 / rp)
    return FrontierCurve(lams, xs, ys, int(grid_size))


def split_midpoint(ratios_on_p, ratios_on_q, f: DivergenceGenerator) -> float:
    rp = np.asarray(ratios_on_p, dtype=float)
    rq = np.asarray(ratios_on_q, dtype=float)
    half = interpolate_generator(f, 0.5)
    with np.errstate(divide="ignore"):
        return 0.5 * _split_coordinate(half, rp, rq) + 0.5 * _split_coordinate(half, 1.0 / rq, 1.0 / rp)


def mauve_score(curve: FrontierCurve, c: float = 5.0) -> float:
    """Area under the exponentiated frontier, closed by ``(1, 0)`` and ``(0, 1)``."""
    if not c > 0:
        raise ValueError("scale c must be positive")
    ex, ey = curve.transformed(c)
    xs = np.concatenate([[1.0, 0.0], ex])
    ys = np.concatenate([[0.0, 1.0], ey])
    # sort by abscissa; among equal abscissae keep the largest ordinate
    order = np.lexsort((-ys, xs))
    xs, ys = xs[order], ys[order]
    _, first = np.unique(xs, return_index=True)
    xs, ys = xs[first], ys[first]
    area = float(np.trapezoid(ys, xs))
    return min(max(area, 0.0), 1.0)


def integrate_curve(curve: FrontierCurve) -> float:
    """Trapezoid estimate of ``2 * int_0^1 [lam x + (1-lam) y] dlam``; both ends contribute 0."""
    lams = np.concatenate([[0.0], curve.lambdas, [1.0]])
    with np.errstate(invalid="ignore"):
        inner = curve.lambdas * curve.x + (1.0 - curve.lambdas) * curve.y
    vals = np.concatenate([[0.0], inner, [0.0]])
    return float(2.0 * np.trapezoid(vals, lams))


def frontier_integral(P, Q, f: Optional[DivergenceGenerator] = None, mode: str = "closed_form",
                      grid_size: int = 2000) -> float:
    """Frontier integral of two histograms.

    ``closed_form`` is available for ``kl`` and ``chi2``; ``quadrature`` works
    for any frontier generator.
    """
    f = make_generator("kl") if f is None else f
    p = as_histogram(P, "P")
    q = as_histogram(Q, "Q")
    if mode == "closed_form":
        if f.name not in _FI_CLOSED_FORM or f.lam is not None:
            raise ValueError(f"no closed-form frontier integral for {f.label!r}; use mode='quadrature'")
        return f_divergence(p, q, make_generator(_FI_CLOSED_FORM[f.name]))
    if mode == "quadrature":
        return integrate_curve(build_frontier(p, q, f, grid_size))
    raise ValueError(f"unknown mode {mode!r}")


def midpoint_score(P, Q, f: Optional[DivergenceGenerator] = None) -> float:
    """``0.5 D_f(P || R) + 0.5 D_f(Q || R)`` with ``R = (P + Q) / 2``."""
    f = make_generator("kl") if f is None else f
    _check_generator(f)
    p = as_histogram(P, "P")
    q = as_histogram(Q, "Q")
    half = interpolate_generator(f, 0.5)
    a = float(_terms(p, q, half).sum())
    b = float(_terms(q, p, half).sum())
    return max(0.5 * a + 0.5 * b, 0.0)


def histogram_scores(P, Q, f: DivergenceGenerator, c: float = 5.0, grid_size: int = 100,
                     estimator: str = "histogram", params: Optional[dict] = None,
                     warnings: Optional[list] = None) -> ScoreReport:
    """All three summaries for a pair of histograms."""
    curve = build_frontier(P, Q, f, grid_size)
    if f.name in _FI_CLOSED_FORM and f.lam is None:
        fi = frontier_integral(P, Q, f, "closed_form")
    else:
        fi = frontier_integral(P, Q, f, "quadrature", max(2000, grid_size))
    mid = midpoint_score(P, Q, f)
    return ScoreReport(
        mauve=mauve_score(curve, c), fi=fi, mid=mid, scale_c=float(c), divergence=f.label,
        estimator=estimator, params=dict(params or {}), warnings=list(warnings or []), curve=curve,
    )


def curve_scores(curve: FrontierCurve, mid: float, divergence: str, c: float,
                 estimator: str, params: Optional[dict] = None,
                 warnings: Optional[list] = None) -> ScoreReport:
    """Summaries for an estimated curve; FI comes from quadrature over the curve."""
    fi = integrate_curve(curve)
    if math.isnan(fi):
        raise FloatingPointError("frontier integral is NaN")
    return ScoreReport(
        mauve=mauve_score(curve, c), fi=fi, mid=float(mid), scale_c=float(c), divergence=divergence,
        estimator=estimator, params=dict(params or {}), warnings=list(warnings or []), curve=curve,
    )
