"""Graph thresholding, BIC tuning and ROC curves."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .em import fit
from .errors import TuningFailedError
from .linalg import logdet_pd, sample_covariance
from .penalty import Hyperparameters

__all__ = ["GraphStructure", "TuneReport", "ZERO_TOL", "bic", "edge_count",
           "default_grid", "tune", "threshold_graph", "graph_from_precision",
           "roc_sweep", "auc"]

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class GraphStructure:
    """Undirected graph on ``p`` nodes; ``edges`` holds pairs ``(i, j)`` with ``i < j``."""

    p: int
    edges: frozenset

    def __post_init__(self):
        edges = frozenset((min(i, j), max(i, j)) for i, j in self.edges)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at {i}")
            if not (0 <= i and j < self.p):
                raise ValueError(f"edge {(i, j)} out of range for p={self.p}")
        object.__setattr__(self, "edges", edges)

    def sorted_edges(self):
        return sorted(self.edges)


@dataclass
class TuneReport:
    grid: list
    scores: list
    best_index: int
    best_fit: object
    edge_counts: list
    diagnostics: list


def edge_count(theta, zero_tol=ZERO_TOL):
    iu = np.triu_indices(theta.shape[0], k=1)
    return int(np.sum(np.abs(theta[iu]) > zero_tol))


def bic(fit_result, s, n, zero_tol=ZERO_TOL):
    """``n (tr(S Theta) - log det Theta) + log(n) * #{i < j : theta_ij != 0}``."""
    theta = getattr(fit_result, "theta_hat", fit_result)
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    lik = n * (float(np.sum(s * theta)) - logdet_pd(theta))
    return lik + math.log(n) * edge_count(theta, zero_tol)


def default_grid(n, p, **overrides):
    """4 x 4 grid: ``v0 = tau in (0.4, 2, 4, 20) / sqrt(n log p)``, ``v1 = v0 * (1.5, 3, 5, 10)``."""
    if n < 2 or p < 2:
        raise ValueError("need n >= 2 and p >= 2")
    base = math.sqrt(1.0 / (n * math.log(p)))
    grid = []
    for c0 in (0.4, 2.0, 4.0, 20.0):
        v0 = c0 * base
        for c1 in (1.5, 3.0, 5.0, 10.0):
            grid.append(Hyperparameters(v0=v0, v1=c1 * v0, eta=0.5, tau=v0, **overrides))
    return grid


def tune(data, grid, jobs=1, center=None):
    """Fit every grid point and keep the one with the smallest BIC.

    Ties go to the fit with fewer edges, then to the earlier grid point.
    """
    if not grid:
        raise ValueError("grid is empty")
    s = sample_covariance(data, center=center)
    n = getattr(data, "n", None) or np.asarray(data).shape[0]

    def one(h):
        try:
            res = fit(s, n, h)
            return res, bic(res, s, n), edge_count(res.theta_hat), None
        except Exception as exc:  # noqa: BLE001 - collected as diagnostics
            return None, math.inf, None, f"{type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, grid))
    else:
        outcomes = [one(h) for h in grid]

    fits = [o[0] for o in outcomes]
    scores = [o[1] for o in outcomes]
    counts = [o[2] for o in outcomes]
    diags = [o[3] for o in outcomes]
    ok = [i for i, f in enumerate(fits) if f is not None and math.isfinite(scores[i])]
    if not ok:
        raise TuningFailedError("every grid point failed", diags)
    best = min(ok, key=lambda i: (scores[i], counts[i], i))
    return TuneReport(grid=list(grid), scores=scores, best_index=best,
                      best_fit=fits[best], edge_counts=counts, diagnostics=diags)


def threshold_graph(pmat, t=0.5):
    """Edges ``(i, j)``, ``i < j``, with ``pmat[i, j] >= t``."""
    if not 0 < t < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    pmat = np.asarray(pmat, dtype=float)
    iu, ju = np.triu_indices(pmat.shape[0], k=1)
    keep = pmat[iu, ju] >= t
    return GraphStructure(pmat.shape[0], frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))


def graph_from_precision(theta, zero_tol=ZERO_TOL):
    """Support graph of a precision matrix."""
    theta = np.asarray(theta, dtype=float)
    iu, ju = np.triu_indices(theta.shape[0], k=1)
    keep = np.abs(theta[iu, ju]) > zero_tol
    return GraphStructure(theta.shape[0], frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))


def auc(curve):
    """Trapezoid area under ``[(fpr, tpr), ...]``."""
    pts = np.asarray(curve, dtype=float)
    return float(np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2.0))


def roc_sweep(pmat, truth, num_points=100):
    """ROC curve from thresholding ``pmat`` at its distinct off-diagonal values.

    When there are more distinct values than ``num_points``, evenly spaced
    ranks of them are used. The curve always contains ``(0, 0)`` and
    ``(1, 1)``. Returns ``(curve, auc)``.
    """
    if num_points < 2:
        raise ValueError("num_points must be at least 2")
    pmat = np.asarray(pmat, dtype=float)
    if pmat.shape != (truth.p, truth.p):
        raise ValueError(f"pmat shape {pmat.shape} does not match truth p={truth.p}")
    iu = np.triu_indices(truth.p, k=1)
    scores = pmat[iu]
    mask = np.zeros((truth.p, truth.p), dtype=bool)
    for i, j in truth.edges:
        mask[i, j] = True
    label = mask[iu]
    npos = int(label.sum())
    nneg = label.size - npos
    levels = np.unique(scores)[::-1]
    if levels.size > num_points:
        idx = np.unique(np.round(np.linspace(0, levels.size - 1, num_points)).astype(int))
        levels = levels[idx]
    curve = [(0.0, 0.0)]
    for t in levels:
        sel = scores >= t
        tpr = float(np.sum(sel & label)) / npos if npos else 0.0
        fpr = float(np.sum(sel & ~label)) / nneg if nneg else 0.0
        curve.append((fpr, tpr))
    curve.append((1.0, 1.0))
    return curve, auc(curve)
