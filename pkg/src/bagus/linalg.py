"""Dense symmetric matrix helpers used throughout the estimator.

Symmetric matrices are plain ``float64`` ndarrays with both triangles
stored. Every function that returns a symmetric matrix makes it exactly
symmetric (``a[i, j] == a[j, i]`` bit for bit).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

from .errors import DegenerateError, InvalidDataError, NotPositiveDefiniteError

__all__ = [
    "ColumnPartition",
    "symmetrize",
    "sample_covariance",
    "partition",
    "reassemble",
    "chol_inverse",
    "logdet_pd",
    "inv11_from_w",
    "rank_two_spectral_bound",
    "spectral_norm",
]


class ColumnPartition(NamedTuple):
    """A symmetric matrix split around column ``target``.

    ``block11`` is the matrix with row and column ``target`` removed,
    ``vec12`` the off-diagonal part of column ``target`` and ``scalar22``
    its diagonal entry.
    """

    target: int
    block11: np.ndarray
    vec12: np.ndarray
    scalar22: float


def symmetrize(a):
    """Return ``(a + a.T) / 2``, which is bit-exactly symmetric."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


def _check_square(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def sample_covariance(data, center=None):
    """Sample covariance ``(1/n) sum_i y_i y_i^T``.

    Parameters
    ----------
    data : Dataset or array_like, shape (n, p)
        Observations as rows.
    center : bool, optional
        Subtract column means first. Defaults to ``False`` for datasets
        produced by a simulator (they are mean zero by construction) and
        ``True`` otherwise.

    Returns
    -------
    ndarray, shape (p, p)
        Divisor ``n``, not ``n - 1``.
    """
    rows = getattr(data, "rows", data)
    if center is None:
        center = getattr(data, "model", None) is None
    y = np.asarray(rows, dtype=float)
    if y.ndim != 2 or y.shape[0] < 1 or y.shape[1] < 1:
        raise InvalidDataError(f"expected an (n, p) array with n, p >= 1, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidDataError("observations contain non-finite values")
    if center:
        y = y - y.mean(axis=0)
    return symmetrize(y.T @ y / y.shape[0])


def partition(m, j):
    """Split ``m`` around column ``j`` (0-based)."""
    m = _check_square(m)
    p = m.shape[0]
    if not 0 <= j < p:
        raise IndexError(f"column index {j} out of range for p={p}")
    keep = np.arange(p) != j
    return ColumnPartition(j, m[np.ix_(keep, keep)], m[keep, j], float(m[j, j]))


def reassemble(part):
    """Inverse of :func:`partition`."""
    p = part.block11.shape[0] + 1
    j = part.target
    keep = np.arange(p) != j
    out = np.empty((p, p))
    out[np.ix_(keep, keep)] = part.block11
    out[keep, j] = part.vec12
    out[j, keep] = part.vec12
    out[j, j] = part.scalar22
    return out


def _cholesky(m):
    try:
        return sla.cho_factor(m, lower=True, check_finite=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None


def chol_inverse(m):
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    m = _check_square(m)
    factor = _cholesky(m)
    inv = sla.cho_solve(factor, np.eye(m.shape[0]))
    return symmetrize(inv)


def logdet_pd(m):
    """``log det m`` for positive definite ``m``; raises if not PD."""
    c, _ = _cholesky(_check_square(m))
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def inv11_from_w(wpart):
    """Inverse of the precision block ``Theta_11`` from the covariance partition.

    Uses ``Theta_11^{-1} = W_11 - w_12 w_12^T / w_22`` so no inversion is needed.
    """
    if not wpart.scalar22 > 0:
        raise DegenerateError(f"w22 must be positive, got {wpart.scalar22}")
    w12 = np.asarray(wpart.vec12, dtype=float)
    return symmetrize(wpart.block11 - np.outer(w12, w12) / wpart.scalar22)


def rank_two_spectral_bound(old_col, new_col, old_diag, new_diag, j=None):
    """Spectral norm of the change made by replacing one row/column.

    The perturbation is zero except in row and column ``j``, so its nonzero
    eigenvalues are ``(delta +- sqrt(delta**2 + 4 ||d||**2)) / 2`` with ``d``
    the off-diagonal change and ``delta`` the diagonal change. ``j`` only
    identifies the column and does not affect the value.
    """
    old_col = np.asarray(old_col, dtype=float)
    new_col = np.asarray(new_col, dtype=float)
    if old_col.shape != new_col.shape or old_col.ndim != 1:
        raise ValueError(f"column shapes differ: {old_col.shape} vs {new_col.shape}")
    d2 = float(np.dot(new_col - old_col, new_col - old_col))
    delta = float(new_diag) - float(old_diag)
    return 0.5 * (abs(delta) + np.sqrt(delta * delta + 4.0 * d2))


def spectral_norm(m):
    """Largest absolute eigenvalue of a symmetric matrix."""
    m = _check_square(m)
    ev = sla.eigvalsh(m)
    return float(max(abs(ev[0]), abs(ev[-1])))
