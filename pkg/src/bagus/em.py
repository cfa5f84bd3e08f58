"""EM estimation of a sparse precision matrix.

The E-step turns the current estimate into slab probabilities, which fix
an adaptive Lasso weight per entry. The M-step sweeps the columns of the
precision matrix; each column is a Lasso-type problem solved by cyclic
coordinate descent, after which the diagonal entry has a closed form and
the covariance ``W = Theta^{-1}`` is refreshed with a rank-one identity
so no matrix is ever inverted inside the loop.

Column ``j`` is never physically moved to the end: all partitions are
index arithmetic on full ``p x p`` arrays, with index ``j`` skipped.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit

from .errors import (DegenerateError, DivergenceError,
                     InternalConsistencyError, NotPositiveDefiniteError)
from .linalg import chol_inverse, rank_two_spectral_bound, spectral_norm, symmetrize
from .penalty import (Hyperparameters, convexity_cap, inclusion_prob,
                      objective, penalty_weight)

__all__ = [
    "FitState",
    "FitResult",
    "e_step",
    "solve_theta12",
    "update_column",
    "fit",
    "kkt_residual",
]

log = logging.getLogger(__name__)


@dataclass
class FitState:
    """Working state of one fit. ``w`` is kept equal to ``theta^{-1}``."""

    theta: np.ndarray
    w: np.ndarray
    pmat: np.ndarray
    iter: int = 0
    objective_trace: list = field(default_factory=list)
    spectral_estimate: float = 1.0
    reverts: int = 0

    @classmethod
    def initial(cls, p, init=None, h=None):
        if init is None:
            theta = np.eye(p)
            w = np.eye(p)
        else:
            theta = symmetrize(init)
            w = chol_inverse(theta)
        pmat = e_step(theta, h) if h is not None else np.full((p, p), 0.5)
        return cls(theta=theta, w=w, pmat=pmat,
                   spectral_estimate=spectral_norm(theta))


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit`.

    ``pmat`` holds slab probabilities evaluated at ``theta_hat``.
    ``nonconvex`` flags fits run with ``B`` at or above the convexity cap.
    ``stalled`` means the iterates stopped moving only because the norm
    constraint rejected updates in the last sweep; such fits are not
    reported as converged.
    """

    theta_hat: np.ndarray
    pmat: np.ndarray
    converged: bool
    sweeps: int
    final_objective: float
    hyper: Hyperparameters
    kkt_residual: float
    objective_trace: tuple = ()
    nonconvex: bool = False
    reverts: int = 0
    stalled: bool = False


def e_step(theta, h):
    """Matrix of slab probabilities; the diagonal is set to 1 and never used."""
    pmat = inclusion_prob(np.asarray(theta, dtype=float), h)
    pmat = np.array(pmat, dtype=float, ndmin=2)
    np.fill_diagonal(pmat, 1.0)
    return pmat


@njit(cache=True, nogil=True)
def _cd_kernel(inv, s_col, lam, theta, skip, n, nw22, tol, max_iter):
    """Cyclic coordinate descent on one column, in place.

    Minimizes ``n s.x + (n w22 / 2) x' inv x + sum lam_k |x_k|`` over the
    coordinates ``k != skip``. Returns the number of sweeps, or -1 if a
    curvature ``n w22 inv_kk`` is not positive.
    """
    p = theta.shape[0]
    r = np.zeros(p)
    for k in range(p):
        if k == skip or theta[k] == 0.0:
            continue
        for i in range(p):
            r[i] += inv[k, i] * theta[k]
    sweeps = 0
    for it in range(max_iter):
        sweeps += 1
        biggest = 0.0
        for k in range(p):
            if k == skip:
                continue
            a = nw22 * inv[k, k]
            if not a > 0.0:
                return -1
            old = theta[k]
            z = -(n * s_col[k] + nw22 * (r[k] - inv[k, k] * old))
            if z > lam[k]:
                new = (z - lam[k]) / a
            elif z < -lam[k]:
                new = (z + lam[k]) / a
            else:
                new = 0.0
            d = new - old
            if d != 0.0:
                theta[k] = new
                for i in range(p):
                    r[i] += inv[k, i] * d
                if abs(d) > biggest:
                    biggest = abs(d)
        if biggest < tol:
            break
    return sweeps


def _solve_column(inv, s_col, lam, theta0, skip, n, w22, h):
    theta = np.array(theta0, dtype=float)
    if skip >= 0:
        theta[skip] = 0.0
    status = _cd_kernel(np.ascontiguousarray(inv, dtype=float),
                        np.asarray(s_col, dtype=float),
                        np.asarray(lam, dtype=float),
                        theta, skip, float(n), float(n) * float(w22),
                        float(h.inner_tol), int(h.max_inner))
    if status < 0:
        raise DegenerateError("coordinate curvature n*w22*inv_kk is not positive")
    return theta


def solve_theta12(s12, w22, inv11, p12, theta12_init, n, h):
    """Solve the column stationary equation by coordinate descent.

    Each coordinate is updated in closed form by soft thresholding at the
    weight ``p/v1 + (1-p)/v0``. Sweeps stop once no coordinate moves by
    ``h.inner_tol`` or after ``h.max_inner`` sweeps.

    Parameters
    ----------
    s12 : ndarray, shape (m,)
        Off-diagonal column of the sample covariance.
    w22 : float
        Target diagonal of the covariance, ``s22 + 2 tau / n``.
    inv11 : ndarray, shape (m, m)
        Inverse of the precision block without the column.
    p12 : ndarray, shape (m,)
        Slab probabilities for the column.
    theta12_init : ndarray, shape (m,)
        Warm start.
    """
    if not w22 > 0:
        raise DegenerateError(f"w22 must be positive, got {w22}")
    lam = penalty_weight(np.asarray(p12, dtype=float), h)
    return _solve_column(inv11, s12, lam, theta12_init, -1, n, w22, h)


def _feasible(state, theta_col, theta22, j, h, bound_on_change):
    """Check the norm constraint for a candidate column; returns (ok, new_estimate)."""
    if h.constraint == "maxelem":
        ok = max(np.max(np.abs(theta_col)), abs(theta22)) <= h.B
        return ok, state.spectral_estimate
    if state.spectral_estimate + bound_on_change <= h.B:
        return True, state.spectral_estimate + bound_on_change
    cand = state.theta.copy()
    cand[:, j] = theta_col
    cand[j, :] = theta_col
    cand[j, j] = theta22
    exact = spectral_norm(cand)
    return exact <= h.B, exact


def update_column(state, j, s, n, h):
    """One M-step column update, in place; returns ``state``.

    Sets the covariance diagonal to ``s_jj + 2 tau / n``, solves for the
    off-diagonal column, enforces the norm constraint (reverting the
    column's off-diagonal part when violated), sets the diagonal entry in
    closed form and refreshes ``W``.
    """
    theta, w = state.theta, state.w
    p = theta.shape[0]
    if not 0 <= j < p:
        raise IndexError(f"column index {j} out of range for p={p}")
    w22 = float(s[j, j]) + 2.0 * h.tau / n
    if not w22 > 0:
        raise DegenerateError(f"w22 = s_jj + 2 tau / n must be positive, got {w22}")
    wjj = w[j, j]
    if not wjj > 0:
        raise DegenerateError(f"current W[{j},{j}] is not positive: {wjj}")
    wj = w[:, j].copy()
    # inverse of Theta without row/column j, embedded in p x p; row/col j unused
    inv = w - np.outer(wj, wj) / wjj
    inv[j, :] = 0.0
    inv[:, j] = 0.0

    old = theta[:, j].copy()
    old[j] = 0.0
    lam = penalty_weight(state.pmat[:, j], h)
    new = _solve_column(inv, s[:, j], lam, old, j, n, w22, h)
    theta22 = 1.0 / w22 + float(new @ inv @ new)

    d_off = np.delete(new - old, j)
    bound = rank_two_spectral_bound(np.zeros_like(d_off), d_off, theta[j, j], theta22, j)
    col = new.copy()
    col[j] = theta22
    ok, est = _feasible(state, col, theta22, j, h, bound)
    if not ok:
        state.reverts += 1
        new = old
        theta22 = 1.0 / w22 + float(old @ inv @ old)
        col = old.copy()
        col[j] = theta22
        bound = abs(theta22 - theta[j, j])
        ok, est = _feasible(state, col, theta22, j, h, bound)
        if not ok:
            # diagonal move alone leaves the ball: keep the column as it is
            return state
    state.spectral_estimate = est

    theta[:, j] = col
    theta[j, :] = col
    u = inv @ new
    u[j] = 0.0
    w[:, :] = inv + w22 * np.outer(u, u)
    w[:, j] = -w22 * u
    w[j, :] = -w22 * u
    w[j, j] = w22
    return state


def _offdiag_grad(theta, h):
    pr = inclusion_prob(theta, h)
    return np.sign(theta) * penalty_weight(pr, h)


def kkt_residual(theta, s, n, h):
    """Largest violation of the stationarity conditions, divided by ``n``.

    Uses the symmetric-entry form of the gradient
    ``(n/2)(S - Theta^{-1}) + Z`` where ``Z`` is ``tau`` on the diagonal
    and half the penalty (sub)gradient off it.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    w = chol_inverse(theta)
    g = 0.5 * n * (s - w)
    p = theta.shape[0]
    off = ~np.eye(p, dtype=bool)
    res = np.zeros((p, p))
    np.fill_diagonal(res, np.abs(np.diag(g) + h.tau))
    nz = off & (theta != 0)
    res[nz] = np.abs(g[nz] + 0.5 * _offdiag_grad(theta[nz], h))
    z = off & (theta == 0)
    half = 0.5 * float(penalty_weight(inclusion_prob(0.0, h), h))
    res[z] = np.maximum(np.abs(g[z]) - half, 0.0)
    return float(res.max()) / n


def fit(s, n, h, init=None, callback: Optional[Callable[[FitState], None]] = None):
    """Compute the MAP precision matrix and slab probabilities.

    Parameters
    ----------
    s : ndarray, shape (p, p)
        Sample covariance.
    n : int
        Sample size the covariance was computed from.
    h : Hyperparameters
        ``h.B=None`` is replaced by 0.99 times the convexity cap.
    init : ndarray, optional
        Positive definite starting point; identity by default.
    callback : callable, optional
        Called with the :class:`FitState` after the initial state and after
        every sweep.

    Returns
    -------
    FitResult
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"s must be square, got {s.shape}")
    s = symmetrize(s)
    p = s.shape[0]
    h = h.resolved(n)
    cap = convexity_cap(n, h.v0)
    nonconvex = h.B >= cap
    if nonconvex:
        warnings.warn(f"B={h.B:.4g} is not below the convexity cap {cap:.4g}; "
                      "the minimizer may not be unique", RuntimeWarning, stacklevel=2)

    state = FitState.initial(p, init)
    if h.constraint == "spectral" and state.spectral_estimate > h.B:
        raise ValueError(f"initial estimate has spectral norm {state.spectral_estimate:.4g} "
                         f"> B={h.B:.4g}")
    state.objective_trace.append(objective(state.theta, s, n, h))
    if callback is not None:
        callback(state)

    converged = stalled = False
    for sweep in range(h.max_outer):
        state.pmat = e_step(state.theta, h)
        before = state.theta.copy()
        reverts_before = state.reverts
        for j in range(p):
            update_column(state, j, s, n, h)
        state.iter = sweep + 1
        try:
            value = objective(state.theta, s, n, h)
        except NotPositiveDefiniteError:
            raise InternalConsistencyError(
                f"estimate lost positive definiteness in sweep {state.iter}") from None
        if not math.isfinite(value):
            raise DivergenceError(f"objective became {value} in sweep {state.iter}")
        state.objective_trace.append(value)
        if h.constraint == "spectral":
            state.spectral_estimate = spectral_norm(state.theta)
        if callback is not None:
            callback(state)
        change = float(np.max(np.abs(state.theta - before)))
        log.debug("sweep %d: objective %.10g, max change %.3g", state.iter, value, change)
        if change < h.outer_tol:
            stalled = state.reverts > reverts_before
            converged = not stalled
            break

    theta_hat = state.theta.copy()
    return FitResult(
        theta_hat=theta_hat,
        pmat=e_step(theta_hat, h),
        converged=converged,
        sweeps=state.iter,
        final_objective=state.objective_trace[-1],
        hyper=h,
        kkt_residual=kkt_residual(theta_hat, s, n, h),
        objective_trace=tuple(state.objective_trace),
        nonconvex=nonconvex,
        reverts=state.reverts,
        stalled=stalled,
    )
