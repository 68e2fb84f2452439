"""Likelihood ratios from a logistic-regression classifier.

The classifier separates X (label 1) from Y (label 0). Its odds, corrected by
the training sample sizes, estimate ``P/Q`` at held-out points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, log_expit

from .frontier import ScoreReport, curve_from_split_samples, curve_scores, split_midpoint
from .generators import DivergenceGenerator
from .quantization import check_embeddings

__all__ = ["ClassifierConfig", "LogisticModel", "fit_logistic", "classifier_likelihood_ratios",
           "classifier_scores"]

ETA_CLAMP = 1e-6


@dataclass
class ClassifierConfig:
    l2_penalty: Optional[float] = None  # None: 1 / n_train
    max_epochs: int = 10000
    learning_rate: Optional[float] = None  # None: 1 / Lipschitz constant
    train_fraction: float = 0.5
    tol: float = 1e-8
    seed: int = 0


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    center: np.ndarray
    l2_penalty: float
    converged: bool
    epochs: int
    grad_norm: float
    loss: float

    def decision(self, Z) -> np.ndarray:
        return (np.asarray(Z, dtype=float) - self.center) @ self.weights + self.bias

    def predict_proba(self, Z) -> np.ndarray:
        """Probability that a point came from X."""
        return expit(self.decision(Z))


def _loss_grad(w, b, A, s, penalty):
    # mean logistic loss with labels s in {-1, +1}, ridge on w only
    z = A @ w + b
    loss = -np.mean(log_expit(s * z)) + 0.5 * penalty * float(w @ w)
    coef = -s * expit(-s * z) / len(s)
    return loss, A.T @ coef + penalty * w, float(coef.sum())


def fit_logistic(X_train, Y_train, config: Optional[ClassifierConfig] = None) -> LogisticModel:
    """Ridge-penalized logistic regression by accelerated full-batch gradient descent.

    Features are centered at the training mean; with an unpenalized bias this
    is only a reparametrization and it keeps the problem well scaled.
    """
    config = config or ClassifierConfig()
    X = check_embeddings(X_train, "X_train")
    Y = check_embeddings(Y_train, "Y_train")
    A = np.vstack([X, Y])
    s = np.concatenate([np.ones(len(X)), -np.ones(len(Y))])
    N = len(s)
    penalty = 1.0 / N if config.l2_penalty is None else float(config.l2_penalty)
    if penalty < 0:
        raise ValueError("l2_penalty must be nonnegative")
    center = A.mean(axis=0)
    A = A - center
    # the loss Hessian is bounded by [A 1]^T [A 1] / (4N) + penalty
    design_norm = np.linalg.norm(np.hstack([A, np.ones((N, 1))]), 2)
    lipschitz = design_norm ** 2 / (4.0 * N) + penalty
    step = 1.0 / lipschitz if config.learning_rate is None else float(config.learning_rate)

    d = A.shape[1]
    w = np.zeros(d)
    b = 0.0
    vw, vb = w.copy(), b
    t = 1.0
    converged = False
    gnorm = math.inf
    loss = math.inf
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        loss, gw, gb = _loss_grad(vw, vb, A, s, penalty)
        gnorm = math.sqrt(float(gw @ gw) + gb * gb)
        if gnorm < config.tol:
            w, b = vw, vb
            converged = True
            break
        w_new = vw - step * gw
        b_new = vb - step * gb
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_new
        # restart the momentum whenever it points uphill
        if float((w_new - w) @ gw) + (b_new - b) * gb > 0:
            t_new, mom = 1.0, 0.0
        vw = w_new + mom * (w_new - w)
        vb = b_new + mom * (b_new - b)
        w, b, t = w_new, b_new, t_new
    if not converged:
        loss, gw, gb = _loss_grad(w, b, A, s, penalty)
        gnorm = math.sqrt(float(gw @ gw) + gb * gb)
    return LogisticModel(w, float(b), center, penalty, converged, epoch, gnorm, float(loss))


def _odds(model: LogisticModel, Z) -> np.ndarray:
    eta = np.clip(model.predict_proba(Z), ETA_CLAMP, 1.0 - ETA_CLAMP)
    return eta / (1.0 - eta)


def classifier_likelihood_ratios(model: LogisticModel, X_eval, Y_eval, n: int, m: int):
    """``P/Q`` estimates ``(m/n) * eta/(1-eta)`` at X_eval and at Y_eval.

    ``n`` and ``m`` are the X and Y training sizes the model was fit with.
    """
    scale = float(m) / float(n)
    return scale * _odds(model, X_eval), scale * _odds(model, Y_eval)


def _split(Z, fraction, rng):
    idx = rng.permutation(len(Z))
    cut = min(max(1, int(math.floor(fraction * len(Z)))), len(Z) - 1)
    return Z[idx[:cut]], Z[idx[cut:]]


def classifier_scores(X, Y, f: DivergenceGenerator, config: Optional[ClassifierConfig] = None,
                      c: float = 2.5, grid_size: int = 100) -> ScoreReport:
    config = config or ClassifierConfig()
    X = check_embeddings(X, "X")
    Y = check_embeddings(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if len(X) < 2 or len(Y) < 2:
        raise ValueError("each sample needs at least two points to split")
    if not 0.0 < config.train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(config.seed)
    X_tr, X_ev = _split(X, config.train_fraction, rng)
    Y_tr, Y_ev = _split(Y, config.train_fraction, rng)
    model = fit_logistic(X_tr, Y_tr, config)
    warnings = []
    if not model.converged:
        warnings.append(f"logistic regression did not converge in {model.epochs} epochs "
                        f"(gradient norm {model.grad_norm:.3g})")
    r_x, r_y = classifier_likelihood_ratios(model, X_ev, Y_ev, len(X_tr), len(Y_tr))
    # where the classifier favours P the held-out X sample is used, elsewhere held-out Y
    curve = curve_from_split_samples(r_x, r_y, f, grid_size)
    mid = split_midpoint(r_x, r_y, f)
    params = {"l2_penalty": model.l2_penalty, "epochs": model.epochs, "converged": model.converged,
              "train_fraction": config.train_fraction, "seed": int(config.seed)}
    return curve_scores(curve, mid, f.label, c, "classifier", params, warnings)
