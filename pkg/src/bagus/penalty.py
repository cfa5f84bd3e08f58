"""Spike-and-slab Lasso penalty and the posterior objective.

The off-diagonal prior is a two-component Laplace mixture with spike
scale ``v0``, slab scale ``v1`` and slab weight ``eta``. Its negative log
density is the penalty; the diagonal gets an exponential prior with rate
``tau`` (a Lasso penalty on positive entries).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import expit

from .linalg import logdet_pd

__all__ = [
    "Hyperparameters",
    "pen_ss",
    "pen_ss_grad",
    "pen_ss_hess",
    "subgradient_interval",
    "inclusion_logit",
    "inclusion_prob",
    "penalty_weight",
    "objective",
    "convexity_cap",
]

# largest double below 1; inclusion probabilities saturate here instead of at 1.0
_P_MAX = float(np.nextafter(1.0, 0.0))
_P_MIN = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class Hyperparameters:
    """Everything that determines a single fit.

    ``B=None`` means "use 0.99 times the convexity cap for the data's n",
    resolved by :func:`bagus.em.fit`. ``constraint`` selects how the
    spectral ball is enforced: ``"spectral"`` (exact, incremental) or
    ``"maxelem"`` (caps the largest absolute entry at ``B`` instead).
    """

    v0: float
    v1: float
    eta: float = 0.5
    tau: Optional[float] = None
    B: Optional[float] = None
    inner_tol: float = 1e-6
    outer_tol: float = 1e-4
    max_inner: int = 100
    max_outer: int = 100
    constraint: str = "spectral"

    def __post_init__(self):
        if self.tau is None:
            object.__setattr__(self, "tau", float(self.v0))
        if not (0 < self.v0 < self.v1):
            raise ValueError(f"need 0 < v0 < v1, got v0={self.v0}, v1={self.v1}")
        if not (0 < self.eta < 1):
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")
        if self.B is not None and not self.B > 0:
            raise ValueError(f"B must be positive, got {self.B}")
        if not (self.inner_tol > 0 and self.outer_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.constraint not in ("spectral", "maxelem"):
            raise ValueError(f"unknown constraint mode {self.constraint!r}")

    def resolved(self, n):
        """Copy with ``B`` filled in from :func:`convexity_cap` when unset."""
        if self.B is not None:
            return self
        return replace(self, B=0.99 * convexity_cap(n, self.v0))

    def to_dict(self):
        return {
            "v0": self.v0, "v1": self.v1, "eta": self.eta, "tau": self.tau,
            "B": self.B, "inner_tol": self.inner_tol, "outer_tol": self.outer_tol,
            "max_inner": self.max_inner, "max_outer": self.max_outer,
            "constraint": self.constraint,
        }


def _log_components(a, h):
    """Log densities of the slab and spike components at ``|theta| = a``."""
    log_slab = math.log(h.eta / (2.0 * h.v1)) - a / h.v1
    log_spike = math.log((1.0 - h.eta) / (2.0 * h.v0)) - a / h.v0
    return log_slab, log_spike


def pen_ss(theta, h):
    """Negative log of the spike-and-slab Lasso prior density.

    Works elementwise on arrays. Evaluated with ``logaddexp`` so large
    ``|theta| / v0`` does not underflow the spike term.
    """
    a = np.abs(theta)
    log_slab = np.log(h.eta / (2.0 * h.v1)) - a / h.v1
    log_spike = np.log((1.0 - h.eta) / (2.0 * h.v0)) - a / h.v0
    out = -np.logaddexp(log_slab, log_spike)
    return float(out) if np.ndim(out) == 0 else out


def inclusion_logit(theta, h):
    """Log-odds that ``theta`` came from the slab component."""
    a = np.abs(theta)
    return (np.log(h.v0 / h.v1) + np.log(h.eta / (1.0 - h.eta))
            + a * (1.0 / h.v0 - 1.0 / h.v1))


def inclusion_prob(theta, h):
    """Conditional slab probability given ``theta``.

    Also the E-step weight. Saturates at the largest double below 1, so
    the result is always strictly inside (0, 1).
    """
    out = np.clip(expit(inclusion_logit(theta, h)), _P_MIN, _P_MAX)
    return float(out) if np.ndim(out) == 0 else out


def penalty_weight(pr, h):
    """Adaptive Lasso weight ``p / v1 + (1 - p) / v0`` for slab probability ``p``."""
    return pr / h.v1 + (1.0 - pr) / h.v0


def pen_ss_grad(theta, h):
    """Derivative of :func:`pen_ss` for ``theta != 0``."""
    if theta == 0:
        raise ValueError("pen_ss is not differentiable at 0; use subgradient_interval")
    w = inclusion_prob(theta, h)
    return math.copysign(w / h.v1 + (1.0 - w) / h.v0, theta)


def subgradient_interval(h):
    """Subdifferential of :func:`pen_ss` at 0 as ``(lo, hi)``."""
    lam0 = float(penalty_weight(inclusion_prob(0.0, h), h))
    return -lam0, lam0


def pen_ss_hess(theta, h):
    """Second derivative of :func:`pen_ss` for ``theta != 0``.

    Equals ``-(1/v0 - 1/v1)**2 * w * (1 - w)`` with ``w`` the slab
    probability; always negative, bounded in magnitude by
    ``(1/v0 - 1/v1)**2 / 4``.
    """
    if theta == 0:
        raise ValueError("pen_ss has a kink at 0; the second derivative is undefined")
    z = float(inclusion_logit(theta, h))
    # w * (1 - w) evaluated without cancellation
    ww = expit(z) * expit(-z)
    c = 1.0 / h.v0 - 1.0 / h.v1
    return -c * c * float(ww)


def objective(theta, s, n, h):
    """Negative log posterior up to an additive constant.

    ``(n/2)(tr(S Theta) - log det Theta) + sum_{i<j} pen_ss(theta_ij)
    + tau * sum_i theta_ii``. Raises :class:`NotPositiveDefiniteError`
    when ``theta`` is not positive definite.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    logdet = logdet_pd(theta)
    iu = np.triu_indices(theta.shape[0], k=1)
    lik = 0.5 * n * (float(np.sum(s * theta)) - logdet)
    pen = float(np.sum(pen_ss(theta[iu], h))) if iu[0].size else 0.0
    return lik + pen + h.tau * float(np.trace(theta))


def convexity_cap(n, v0):
    """``sqrt(2 n v0)``; spectral bounds below this keep the fit in the convex regime."""
    return math.sqrt(2.0 * n * v0)
