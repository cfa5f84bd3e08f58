"""Ground-truth precision matrices, Gaussian sampling and replication.

Four benchmark structures are provided: ``star``, ``ar2``, ``circle`` and
``random_graph``. Random streams come from numpy's PCG64 seeded through
``SeedSequence`` so replications get independent, reproducible streams.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import GenerationFailedError, NotPositiveDefiniteError
from .linalg import chol_inverse, symmetrize

__all__ = ["MODELS", "SimulationSpec", "truth_matrix", "sample_mvn", "simulate",
           "replication_seed", "replicate", "ReplicateReport"]

MODELS = ("star", "ar2", "circle", "random_graph")
_ALIASES = {"random": "random_graph"}
GENERATOR = "numpy.PCG64"


@dataclass(frozen=True)
class SimulationSpec:
    model: str
    p: int
    n: int
    seed: int = 0
    sigma2: float = 3.0

    def __post_init__(self):
        model = _ALIASES.get(self.model, self.model)
        if model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        object.__setattr__(self, "model", model)
        if self.p < 3:
            raise ValueError(f"p must be at least 3, got {self.p}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


def _rng(*key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


def _star(p):
    t = np.eye(p)
    t[0, 1:] = t[1:, 0] = 1.0 / math.sqrt(p)
    return t


def _ar2(p):
    t = np.eye(p)
    i = np.arange(1, p)
    t[i, i - 1] = t[i - 1, i] = 0.5
    i = np.arange(2, p)
    t[i, i - 2] = t[i - 2, i] = 0.25
    return t


def _circle(p):
    t = 2.0 * np.eye(p)
    i = np.arange(1, p)
    t[i, i - 1] = t[i - 1, i] = 1.0
    t[0, p - 1] = t[p - 1, 0] = 0.9
    return t


def _rescaled_draw(p, rng):
    """Unit diagonal plus ``floor(1.5 p)`` signed entries, columns rescaled.

    Each off-diagonal column sum is at most ``1 / 1.1`` afterwards, so the
    result is strictly diagonally dominant column by column. It is not yet
    symmetric.
    """
    t = np.eye(p)
    iu, ju = np.triu_indices(p, k=1)
    count = min(int(math.floor(1.5 * p)), iu.size)
    pick = rng.choice(iu.size, size=count, replace=False)
    mag = rng.uniform(0.4, 1.0, size=count)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    t[iu[pick], ju[pick]] = sign * mag
    t[ju[pick], iu[pick]] = sign * mag
    off = t - np.diag(np.diag(t))
    colsum = np.abs(off).sum(axis=0)
    scale = np.where(colsum > 0, 1.1 * colsum, 1.0)
    return np.eye(p) + off / scale[np.newaxis, :]


def _random_graph_draw(p, sigma2, rng):
    return sigma2 * symmetrize(_rescaled_draw(p, rng))


def truth_matrix(spec, max_tries=10):
    """Ground-truth precision matrix for ``spec``.

    ``random_graph`` draws ``floor(1.5 p)`` distinct upper-triangle
    positions, fills them with magnitudes uniform on [0.4, 1] and random
    signs, divides each off-diagonal entry by 1.1 times its column's
    off-diagonal absolute sum, averages with the transpose and multiplies
    by ``sigma2``. Draws that are not positive definite are retried.
    """
    if spec.model == "star":
        return _star(spec.p)
    if spec.model == "ar2":
        return _ar2(spec.p)
    if spec.model == "circle":
        return _circle(spec.p)
    rng = _rng(spec.seed, 0x7275)
    for _ in range(max_tries):
        t = _random_graph_draw(spec.p, spec.sigma2, rng)
        if np.linalg.eigvalsh(t)[0] > 0:
            return t
    raise GenerationFailedError(f"no positive definite draw in {max_tries} tries")


def sample_mvn(theta0, n, seed):
    """``n`` draws from ``N(0, theta0^{-1})`` as a :class:`Dataset`."""
    theta0 = np.asarray(theta0, dtype=float)
    sigma = chol_inverse(theta0)
    try:
        lower = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    z = _rng(seed).standard_normal((n, theta0.shape[0]))
    return Dataset(rows=z @ lower.T, truth=theta0, seed=seed, generator=GENERATOR)


def simulate(spec):
    """Truth matrix plus a sample for ``spec``."""
    data = sample_mvn(truth_matrix(spec), spec.n, spec.seed)
    return Dataset(rows=data.rows, truth=data.truth, seed=spec.seed,
                   model=spec.model, generator=GENERATOR)


def replication_seed(seed, index):
    """Seed for replication ``index``, split deterministically from ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0]
               & 0x7FFFFFFFFFFFFFFF)


@dataclass
class ReplicateReport:
    """Per-metric mean and sample standard deviation over replications."""

    mean: dict
    sd: dict
    values: dict
    reps: int
    failures: int
    errors: list

    def formatted(self, digits=3):
        """``{"metric": "mean(sd)"}`` strings."""
        return {k: f"{self.mean[k]:.{digits}f}({self.sd[k]:.{digits}f})" for k in self.mean}

    def to_dict(self):
        return {"mean": self.mean, "sd": self.sd, "reps": self.reps,
                "failures": self.failures, "formatted": self.formatted()}


def replicate(spec, reps, runner, jobs=1):
    """Run ``runner(dataset, index)`` on ``reps`` independent datasets.

    ``runner`` returns a mapping of metric name to number. Failures are
    counted instead of raised. Standard deviations use the ``n - 1``
    divisor and are 0 for a single replication.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")

    def one(i):
        sub = SimulationSpec(spec.model, spec.p, spec.n, replication_seed(spec.seed, i),
                             spec.sigma2)
        try:
            return runner(simulate(sub), i)
        except Exception as exc:  # noqa: BLE001 - failures are tallied, not fatal
            return exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, range(reps)))
    else:
        outcomes = [one(i) for i in range(reps)]

    values, errors = {}, []
    for i, out in enumerate(outcomes):
        if isinstance(out, Exception):
            errors.append(f"replication {i}: {type(out).__name__}: {out}")
            continue
        for key, val in out.items():
            values.setdefault(key, []).append(float(val))
    mean = {k: float(np.mean(v)) for k, v in values.items()}
    sd = {k: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0 for k, v in values.items()}
    return ReplicateReport(mean=mean, sd=sd, values=values, reps=reps,
                           failures=len(errors), errors=errors)
