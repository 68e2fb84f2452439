"""Divergence generators and f-divergences between finite histograms.

A generator ``f`` is a convex function on ``(0, inf)`` with ``f(1) = 0``. The
f-divergence between histograms ``P`` and ``Q`` is ``sum_l Q_l f(P_l / Q_l)``
with the boundary conventions ``0 * f(p / 0) = p * f*(0)`` and
``q * f(0 / q) = q * f(0)``. Limits at zero are stored on the generator so
they never have to be recovered numerically.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Constants",
    "DivergenceGenerator",
    "GENERATOR_NAMES",
    "make_generator",
    "conjugate",
    "interpolate_generator",
    "parse_generator",
    "f_divergence",
    "psi",
    "mix",
    "as_histogram",
]

INF = math.inf
LOG2 = math.log(2.0)

# below this distance from t = 1 the FI generators switch to a Taylor series
_TAYLOR_RADIUS = 0.05
_SERIES_TERMS = 16
_RATIO_CAP = 1e100


@dataclass(frozen=True)
class Constants:
    """Smoothness constants (C0, C0*, C1, C1*, C2, C2*); ``None`` marks a blank table cell."""

    C0: float
    C0_star: float
    C1: Optional[float] = None
    C1_star: Optional[float] = None
    C2: Optional[float] = None
    C2_star: Optional[float] = None
    satisfies_assumptions: bool = True

    def swapped(self) -> "Constants":
        return Constants(
            self.C0_star, self.C0, self.C1_star, self.C1,
            self.C2_star, self.C2, self.satisfies_assumptions,
        )


@dataclass(frozen=True, eq=False)
class DivergenceGenerator:
    """A named convex generator together with its limits at zero.

    ``func`` only has to be valid for strictly positive arguments; calling the
    generator handles ``t = 0`` through ``f_at_zero``.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    f_at_zero: float
    fstar_at_zero: float
    constants: Optional[Constants] = None
    lam: Optional[float] = None
    frontier_ok: bool = True
    _conjugate_of: Optional["DivergenceGenerator"] = field(default=None, repr=False)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
            raise ValueError("generator arguments must be nonnegative numbers")
        pos = t_arr > 0
        out = np.full(t_arr.shape, self.f_at_zero, dtype=float)
        if np.any(pos):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                out[pos] = self.func(t_arr[pos])
        if out.ndim == 0:
            return float(out)
        return out

    def eval(self, t):
        return self(t)

    @property
    def label(self) -> str:
        if self.lam is None:
            return self.name
        return f"{self.name}({self.lam:g})"


# closed forms, valid for t > 0


def _kl(t):
    return t * np.log(t) - t + 1.0


def _chi2(t):
    return (t - 1.0) ** 2


def _skew_js(lam):
    def f(t):
        m = 1.0 + lam * (t - 1.0)
        return lam * t * np.log(t / m) + (1.0 - lam) * np.log(1.0 / m)
    return f


def _interp_chi2(lam):
    def f(t):
        return (t - 1.0) ** 2 / (1.0 + lam * (t - 1.0))
    return f


def _lecam(t):
    return (t - 1.0) ** 2 / (2.0 * (t + 1.0))


def _fi_kl(t):
    # (t+1)/2 - t log t / (t-1). The two terms cancel to O(u^2) near t = 1, so
    # there the power series sum_{n>=2} (-1)^n u^n / (n (n+1)) in u = t - 1 is used.
    t = np.asarray(t, dtype=float)
    u = t - 1.0
    near = np.abs(u) < _TAYLOR_RADIUS
    out = np.empty_like(t)
    uf = u[~near]
    tf = t[~near]
    out[~near] = (tf + 1.0) / 2.0 - tf * np.log(tf) / uf
    un = u[near]
    acc = np.zeros_like(un)
    for n in range(_SERIES_TERMS, 1, -1):
        acc = (acc + (-1) ** n / (n * (n + 1.0))) * un
    out[near] = acc * un
    return out


def _fi_chi2(t):
    return 2.0 * _fi_kl(t)


def _tv(t):
    return 0.5 * np.abs(t - 1.0)


def _sq_hellinger(t):
    return (np.sqrt(t) - 1.0) ** 2


_LAMBDA_FAMILIES = ("interp_kl", "skew_js", "interp_chi2")

GENERATOR_NAMES = (
    "kl", "chi2", "interp_kl", "js", "skew_js", "interp_chi2",
    "lecam", "fi_kl", "fi_chi2", "tv", "sq_hellinger",
)


def _check_lambda(lam) -> float:
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in the open interval (0, 1), got {lam}")
    return lam


def make_generator(name: str, lam: Optional[float] = None) -> DivergenceGenerator:
    """Build one of the named generators.

    ``lam`` is required for ``interp_kl``, ``skew_js`` and ``interp_chi2`` and
    must be omitted otherwise.
    """
    if name not in GENERATOR_NAMES:
        raise ValueError(f"unknown generator {name!r}; expected one of {GENERATOR_NAMES}")
    if name in _LAMBDA_FAMILIES:
        if lam is None:
            raise ValueError(f"generator {name!r} needs a lambda")
        lam = _check_lambda(lam)
    elif lam is not None:
        raise ValueError(f"generator {name!r} does not take a lambda")

    if name == "kl":
        return DivergenceGenerator("kl", _kl, 1.0, INF, Constants(1.0, INF, satisfies_assumptions=False))
    if name == "chi2":
        return DivergenceGenerator("chi2", _chi2, 1.0, INF, None)
    if name == "interp_kl":
        lb = 1.0 - lam
        base = interpolate_generator(make_generator("kl"), lam)
        consts = Constants(lb, math.log(1.0 / lam) - lb, 1.0, lb * lb / lam, 0.5, lb / (8.0 * lam))
        return replace(base, name="interp_kl", constants=consts)
    if name == "js":
        consts = Constants(0.5 * LOG2, 0.5 * LOG2, 0.5, 0.5, 0.25, 0.25)
        return DivergenceGenerator("js", _skew_js(0.5), 0.5 * LOG2, 0.5 * LOG2, consts)
    if name == "skew_js":
        lb = 1.0 - lam
        consts = Constants(lb * math.log(1.0 / lb), lam * math.log(1.0 / lam), lam, lb, lam / 2.0, lb / 2.0)
        return DivergenceGenerator(
            "skew_js", _skew_js(lam), lb * math.log(1.0 / lb), lam * math.log(1.0 / lam), consts, lam=lam
        )
    if name == "interp_chi2":
        lb = 1.0 - lam
        consts = Constants(
            1.0 / lb, 1.0 / lam, 2.0 / lb ** 2, 2.0 / lam ** 2,
            4.0 / (27.0 * lam * lb ** 2), 4.0 / (27.0 * lam ** 2 * lb),
        )
        return DivergenceGenerator("interp_chi2", _interp_chi2(lam), 1.0 / lb, 1.0 / lam, consts, lam=lam)
    if name == "lecam":
        consts = Constants(0.5, 0.5, 2.0, 2.0, 8.0 / 27.0, 8.0 / 27.0)
        return DivergenceGenerator("lecam", _lecam, 0.5, 0.5, consts)
    if name == "fi_kl":
        return DivergenceGenerator("fi_kl", _fi_kl, 0.5, 0.5, Constants(0.5, 0.5, 4.0, 4.0, 0.5, 0.5))
    if name == "fi_chi2":
        return DivergenceGenerator("fi_chi2", _fi_chi2, 1.0, 1.0, None)
    if name == "tv":
        return DivergenceGenerator("tv", _tv, 0.5, 0.5, None, frontier_ok=False)
    # sq_hellinger
    return DivergenceGenerator(
        "sq_hellinger", _sq_hellinger, 1.0, 1.0,
        Constants(1.0, 1.0, INF, INF, satisfies_assumptions=False), frontier_ok=False,
    )


def parse_generator(spec: str) -> DivergenceGenerator:
    """Parse ``"kl"``, ``"skew_js:0.3"`` or ``"skew_js(0.3)"``."""
    text = spec.strip()
    lam = None
    if text.endswith(")") and "(" in text:
        text, _, arg = text[:-1].partition("(")
        lam = float(arg)
    elif ":" in text:
        text, _, arg = text.partition(":")
        lam = float(arg)
    return make_generator(text.strip(), lam)


def conjugate(f: DivergenceGenerator) -> DivergenceGenerator:
    """Return ``f*(t) = t f(1/t)``; conjugating twice gives back ``f`` itself."""
    if f._conjugate_of is not None:
        return f._conjugate_of
    func = f.func

    def g(t):
        return t * func(1.0 / t)

    consts = f.constants.swapped() if f.constants is not None else None
    return DivergenceGenerator(
        f"conj({f.name})", g, f.fstar_at_zero, f.f_at_zero, consts,
        lam=f.lam, frontier_ok=f.frontier_ok, _conjugate_of=f,
    )


def interpolate_generator(f: DivergenceGenerator, lam: float) -> DivergenceGenerator:
    """Generator ``f_lam`` with ``D_{f_lam}(P || Q) = D_f(P || lam P + (1 - lam) Q)``."""
    lam = _check_lambda(lam)
    func = f.func
    f0 = f.f_at_zero

    def g(t):
        m = 1.0 + lam * (t - 1.0)
        return m * func(t / m)

    # t f_lam(1/t) -> lam f(1/lam) = f*(lam) as t -> 0
    fstar0 = float(lam * func(np.array([1.0 / lam]))[0])
    return DivergenceGenerator(
        f"interp[{f.label}]", g, (1.0 - lam) * f0, fstar0, None, lam=lam, frontier_ok=f.frontier_ok
    )


def as_histogram(p, name: str = "histogram", atol: float = 1e-9) -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a nonempty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(arr.sum() - 1.0) > atol:
        raise ValueError(f"{name} sums to {arr.sum()!r}, not 1")
    return arr


def mix(lam: float, P, Q) -> np.ndarray:
    return lam * np.asarray(P, dtype=float) + (1.0 - lam) * np.asarray(Q, dtype=float)


def _terms(p: np.ndarray, q: np.ndarray, f: DivergenceGenerator) -> np.ndarray:
    """Per-bin contributions ``q f(p/q)`` with the boundary conventions; broadcasts."""
    p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    out = np.zeros(p.shape, dtype=float)
    both = (p > 0) & (q > 0)
    if np.any(both):
        qb = q[both]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = p[both] / qb
            # past the cap q f(p/q) equals its limit p f*(0) to double precision, and
            # evaluating f there can overflow
            cap = _RATIO_CAP if math.isfinite(f.fstar_at_zero) else math.inf
            direct = ratio <= cap
            vals = p[both] * f.fstar_at_zero
            vals[direct] = qb[direct] * f.func(ratio[direct])
            out[both] = vals
    only_q = (p == 0) & (q > 0)
    if np.any(only_q):
        out[only_q] = q[only_q] * f.f_at_zero
    only_p = (p > 0) & (q == 0)
    if np.any(only_p):
        out[only_p] = p[only_p] * f.fstar_at_zero
    return out


def interpolated_divergences(p: np.ndarray, q: np.ndarray, f: DivergenceGenerator, lams) -> np.ndarray:
    """``D_{f_lam}(P || Q)`` for every ``lam`` in ``lams`` at once.

    Evaluates the same per-bin terms as ``_terms(p, q, interpolate_generator(f, lam))``
    without a Python loop over the grid. Bins with ``p == q`` give ``m == 1`` and
    ``f(1) == 0`` exactly, so equal histograms still produce exact zeros.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    lams = np.asarray(lams, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # t f_lam(1/t) -> lam f(1/lam) as t -> 0
        fstar0 = lams * f.func(1.0 / lams)
    both = (p > 0) & (q > 0)
    only_q = (p == 0) & (q > 0)
    only_p = (p > 0) & (q == 0)
    pb, qb = p[both], q[both]
    ratio = pb / qb
    direct = ratio <= _RATIO_CAP
    rd, qd = ratio[direct], qb[direct]
    capped_mass = pb[~direct].sum() + p[only_p].sum()
    q_mass = q[only_q].sum()
    out = np.empty(lams.shape, dtype=float)
    # keep each block near a million entries
    step = max(1, 1_000_000 // max(rd.size, 1))
    for start in range(0, lams.size, step):
        lam = lams[start:start + step, None]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            m = 1.0 + lam * (rd - 1.0)
            vals = qd * m * f.func(rd / m)
        out[start:start + step] = vals.sum(axis=1)
    out += capped_mass * fstar0 + q_mass * (1.0 - lams) * f.f_at_zero
    return out


def psi(p: float, q: float, f: DivergenceGenerator) -> float:
    """Single-bin contribution ``q f(p/q)``; ``psi(0, 0) = 0``."""
    if p < 0 or q < 0:
        raise ValueError("psi arguments must be nonnegative")
    return float(_terms(np.array([p]), np.array([q]), f)[0])


def f_divergence(P, Q, f: DivergenceGenerator) -> float:
    """``D_f(P || Q)`` over finite histograms; may return ``inf``."""
    p = np.asarray(P, dtype=float)
    q = np.asarray(Q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"histogram shapes differ: {p.shape} vs {q.shape}")
    if np.isnan(p).any() or np.isnan(q).any():
        raise ValueError("histograms contain NaN")
    if (p < 0).any() or (q < 0).any():
        raise ValueError("histograms contain negative entries")
    total = float(_terms(p, q, f).sum())
    # rounding can push a zero divergence to -1e-17
    return max(total, 0.0)
