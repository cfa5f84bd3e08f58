"""Estimation error, edge-recovery metrics and conditional-mean forecasts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .errors import InternalConsistencyError
from .linalg import spectral_norm

__all__ = ["MetricsReport", "ForecastTask", "error_norms", "confusion", "mcc",
           "sensitivity", "specificity", "evaluate", "forecast", "aafe",
           "training_mean"]


@dataclass(frozen=True)
class MetricsReport:
    fnorm: float
    max_norm: float
    spectral_err: float
    sensitivity: float
    specificity: float
    mcc: float
    auc: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def error_norms(theta_hat, theta0):
    """Frobenius, entrywise-max and spectral norms of ``theta_hat - theta0``."""
    a = np.asarray(theta_hat, dtype=float)
    b = np.asarray(theta0, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return (float(np.sqrt(np.sum(d * d))), float(np.max(np.abs(d))), spectral_norm(d))


def _edge_mask(graph):
    p = graph.p
    m = np.zeros((p, p), dtype=bool)
    for i, j in graph.edges:
        m[i, j] = True
    return m


def confusion(est, truth):
    """``(tp, fp, tn, fn)`` over unordered pairs ``i < j``."""
    if est.p != truth.p:
        raise ValueError(f"graphs have different sizes: {est.p} vs {truth.p}")
    iu = np.triu_indices(est.p, k=1)
    e = _edge_mask(est)[iu]
    t = _edge_mask(truth)[iu]
    tp = int(np.sum(e & t))
    fp = int(np.sum(e & ~t))
    fn = int(np.sum(~e & t))
    tn = int(np.sum(~e & ~t))
    return tp, fp, tn, fn


def mcc(tp, fp, tn, fn):
    """Matthews correlation coefficient; 0 when any margin is empty."""
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def sensitivity(tp, fn):
    return tp / (tp + fn) if tp + fn else 0.0


def specificity(tn, fp):
    return tn / (tn + fp) if tn + fp else 0.0


def evaluate(theta_hat, theta0, est, truth, auc=None):
    """Bundle error norms and selection metrics into a :class:`MetricsReport`."""
    fnorm, max_norm, spec = error_norms(theta_hat, theta0)
    tp, fp, tn, fn = confusion(est, truth)
    return MetricsReport(fnorm=fnorm, max_norm=max_norm, spectral_err=spec,
                         sensitivity=sensitivity(tp, fn), specificity=specificity(tn, fp),
                         mcc=mcc(tp, fp, tn, fn), auc=auc)


@dataclass(frozen=True)
class ForecastTask:
    """Predict coordinates ``k:`` from coordinates ``:k`` under a Gaussian model."""

    mu: np.ndarray
    theta: np.ndarray
    split: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        p = mu.shape[0]
        if theta.shape != (p, p):
            raise ValueError(f"theta has shape {theta.shape}, expected ({p}, {p})")
        if not 1 <= self.split < p:
            raise ValueError(f"split must satisfy 1 <= k < p, got k={self.split}, p={p}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "theta", theta)


def forecast(task, z1):
    """Conditional mean ``mu_2 - Theta_22^{-1} Theta_21 (z1 - mu_1)``.

    ``z1`` may be a single vector of length ``k`` or an ``(m, k)`` array of
    rows; the result has matching leading shape.
    """
    k = task.split
    z1 = np.asarray(z1, dtype=float)
    if z1.shape[-1] != k:
        raise ValueError(f"z1 has length {z1.shape[-1]}, expected {k}")
    t22 = task.theta[k:, k:]
    t21 = task.theta[k:, :k]
    resid = (z1.reshape(-1, k) - task.mu[:k]).T
    try:
        factor = sla.cho_factor(t22, lower=True)
    except sla.LinAlgError:
        raise InternalConsistencyError("Theta_22 is not positive definite") from None
    shift = sla.cho_solve(factor, t21 @ resid)
    return (task.mu[k:][:, None] - shift).T.reshape(z1.shape[:-1] + (t22.shape[0],))


def training_mean(rows):
    """Column means; the mean estimate used for forecasting."""
    return np.asarray(rows, dtype=float).mean(axis=0)


def aafe(predictions, actuals):
    """Average absolute forecast error per time point (mean over rows)."""
    a = np.asarray(predictions, dtype=float)
    b = np.asarray(actuals, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return np.mean(np.abs(a - b), axis=0)
