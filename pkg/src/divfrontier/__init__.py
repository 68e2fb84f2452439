"""Divergence frontiers, MAUVE, frontier integrals and their estimators."""

from ._backend import BACKEND
from .classifier import ClassifierConfig, classifier_scores, fit_logistic
from .config import ConfigError, RunConfig, run_estimator
from .frontier import (
    FrontierCurve,
    ScoreReport,
    build_frontier,
    frontier_integral,
    mauve_score,
    midpoint_score,
)
from .generators import (
    DivergenceGenerator,
    conjugate,
    f_divergence,
    interpolate_generator,
    make_generator,
    parse_generator,
    psi,
)
from .knn import KnnConfig, kde_scores, knn_scores, pca_reduce
from .ot import cost_matrix, ot_frontier_linear, ot_scores, sinkhorn_ot
from .parametric import fit_gaussian, gaussian_f_divergence_mc, gaussian_scores
from .quantization import Smoothing, kmeans_fit, quantized_scores, smooth_counts

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ClassifierConfig",
    "ConfigError",
    "DivergenceGenerator",
    "FrontierCurve",
    "KnnConfig",
    "RunConfig",
    "ScoreReport",
    "Smoothing",
    "build_frontier",
    "classifier_scores",
    "conjugate",
    "cost_matrix",
    "f_divergence",
    "fit_gaussian",
    "fit_logistic",
    "frontier_integral",
    "gaussian_f_divergence_mc",
    "gaussian_scores",
    "interpolate_generator",
    "kde_scores",
    "kmeans_fit",
    "knn_scores",
    "make_generator",
    "mauve_score",
    "midpoint_score",
    "ot_frontier_linear",
    "ot_scores",
    "parse_generator",
    "pca_reduce",
    "psi",
    "quantized_scores",
    "run_estimator",
    "sinkhorn_ot",
    "smooth_counts",
]
