"""Run configuration shared by the command line and the Python API."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .classifier import ClassifierConfig, classifier_scores
from .frontier import ScoreReport
from .generators import parse_generator
from .knn import KnnConfig, kde_scores, knn_scores
from .ot import ot_scores
from .parametric import gaussian_scores
from .quantization import Smoothing, check_embeddings, quantized_scores

__all__ = ["ConfigError", "RunConfig", "ESTIMATORS", "DEFAULT_C", "run_estimator"]

ESTIMATORS = ("quantize", "knn", "kde", "classifier", "gaussian", "ot")
SUMMARIES = ("mauve", "fi", "mid")
DEFAULT_C = {"quantize": 5.0, "knn": 10.0, "kde": 10.0, "classifier": 2.5, "gaussian": 1.0, "ot": 1.0}
DEFAULT_BUCKETS = 500
# transport needs a k-by-k cost matrix per grid point, so its default is smaller
DEFAULT_OT_BUCKETS = 50


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    estimator: str = "quantize"
    divergence: str = "kl"
    summaries: list = field(default_factory=lambda: list(SUMMARIES))
    k: Optional[int] = None  # buckets; None = min(500 (50 for ot), ceil((n + m) / 10))
    smoothing: str = "krichevsky_trofimov"
    c: Optional[float] = None  # None = per-estimator default
    grid_size: int = 100
    pca_dims: Optional[int] = None
    knn_k: Optional[int] = None
    noise_sigma: float = 0.0
    bandwidth: Optional[float] = None
    l2_penalty: Optional[float] = None
    mc_samples: int = 100_000
    epsilon: Optional[float] = None
    max_iters: int = 300
    seed: Optional[int] = None
    format: str = "json"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def scale(self) -> float:
        return DEFAULT_C[self.estimator] if self.c is None else float(self.c)

    def validate(self) -> None:
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}; expected one of {', '.join(ESTIMATORS)}")
        try:
            gen = parse_generator(self.divergence)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not gen.frontier_ok:
            raise ConfigError(f"divergence {self.divergence!r} cannot define a frontier")
        if isinstance(self.summaries, str):
            self.summaries = [s for s in self.summaries.split(",") if s]
        bad = [s for s in self.summaries if s not in SUMMARIES]
        if bad or not self.summaries:
            raise ConfigError(f"summaries must be a nonempty subset of {', '.join(SUMMARIES)}")
        try:
            self.smoothing = Smoothing.parse(self.smoothing).value
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        checks = [
            ("k", self.k, lambda v: v is None or (isinstance(v, int) and v >= 1)),
            ("c", self.c, lambda v: v is None or (v > 0 and math.isfinite(v))),
            ("grid_size", self.grid_size, lambda v: isinstance(v, int) and v >= 2),
            ("pca_dims", self.pca_dims, lambda v: v is None or (isinstance(v, int) and v >= 1)),
            ("knn_k", self.knn_k, lambda v: v is None or (isinstance(v, int) and v >= 1)),
            ("noise_sigma", self.noise_sigma, lambda v: v >= 0),
            ("bandwidth", self.bandwidth, lambda v: v is None or (v > 0 and math.isfinite(v))),
            ("l2_penalty", self.l2_penalty, lambda v: v is None or v >= 0),
            ("mc_samples", self.mc_samples, lambda v: isinstance(v, int) and v >= 2),
            ("epsilon", self.epsilon, lambda v: v is None or (v > 0 and math.isfinite(v))),
            ("max_iters", self.max_iters, lambda v: isinstance(v, int) and v >= 1),
            ("seed", self.seed, lambda v: v is None or (isinstance(v, int) and v >= 0)),
        ]
        for name, value, ok in checks:
            try:
                good = ok(value)
            except TypeError:
                good = False
            if not good:
                raise ConfigError(f"invalid value for {name}: {value!r}")


def _buckets(cfg: RunConfig, total: int, cap: int = DEFAULT_BUCKETS) -> int:
    if cfg.k is not None:
        if cfg.k > total:
            raise ConfigError(f"k={cfg.k} exceeds the number of points ({total})")
        return cfg.k
    return max(1, min(cap, math.ceil(total / 10)))


def _scott_bandwidth(X, Y) -> float:
    joint = np.vstack([X, Y])
    n, d = joint.shape
    sigma = float(np.mean(joint.std(axis=0, ddof=1))) if n > 1 else 1.0
    return (sigma if sigma > 0 else 1.0) * n ** (-1.0 / (d + 4))


def run_estimator(X, Y, cfg: RunConfig) -> ScoreReport:
    """Score two embedding sets with the estimator named in ``cfg``.

    ``cfg.seed`` must already be resolved to an integer.
    """
    cfg.validate()
    X = check_embeddings(X, "P embeddings")
    Y = check_embeddings(Y, "Q embeddings")
    if X.shape[1] != Y.shape[1]:
        raise ConfigError(f"dimension mismatch: P has {X.shape[1]} columns, Q has {Y.shape[1]}")
    seed = 0 if cfg.seed is None else cfg.seed
    f = parse_generator(cfg.divergence)
    c = cfg.scale()
    total = len(X) + len(Y)
    if cfg.estimator == "quantize":
        return quantized_scores(X, Y, f, k=_buckets(cfg, total), smoothing=cfg.smoothing, c=c,
                                grid_size=cfg.grid_size, seed=seed, max_iters=cfg.max_iters)
    if cfg.estimator == "knn":
        kc = KnnConfig(k_neighbors=cfg.knn_k, pca_dims=cfg.pca_dims, noise_sigma=cfg.noise_sigma, seed=seed)
        return knn_scores(X, Y, f, kc, c=c, grid_size=cfg.grid_size)
    if cfg.estimator == "kde":
        h = cfg.bandwidth if cfg.bandwidth is not None else _scott_bandwidth(X, Y)
        return kde_scores(X, Y, f, h, pca_dims=cfg.pca_dims, c=c, grid_size=cfg.grid_size)
    if cfg.estimator == "classifier":
        cc = ClassifierConfig(l2_penalty=cfg.l2_penalty, seed=seed)
        return classifier_scores(X, Y, f, cc, c=c, grid_size=cfg.grid_size)
    if cfg.estimator == "gaussian":
        dims = 10 if cfg.pca_dims is None else cfg.pca_dims
        return gaussian_scores(X, Y, f, pca_dims=dims, num_samples=cfg.mc_samples, c=c,
                               grid_size=cfg.grid_size, seed=seed)
    return ot_scores(X, Y, k=_buckets(cfg, total, DEFAULT_OT_BUCKETS), smoothing=cfg.smoothing,
                     epsilon=cfg.epsilon, c=c, grid_size=cfg.grid_size, seed=seed, max_iters=cfg.max_iters)
