"""Seeded random problem instances for the descent and stationarity suites."""

import math

import numpy as np

from bagus.penalty import Hyperparameters, convexity_cap


def random_instance(seed):
    """Random (S, n, h) with p in {3, 5, 10} and B at 0.99 of the convexity cap."""
    rng = np.random.default_rng([2718, seed])
    p = (3, 5, 10)[seed % 3]
    n = int(rng.integers(20, 201))
    a = rng.standard_normal((p, p)) * rng.uniform(0.2, 1.0)
    s = a @ a.T / p + rng.uniform(0.2, 1.0) * np.eye(p)
    s = (s + s.T) / 2
    while True:
        v0 = math.exp(rng.uniform(math.log(0.01), math.log(0.5)))
        if convexity_cap(n, v0) > 1.05:
            break
    v1 = v0 * rng.uniform(1.5, 20.0)
    eta = rng.uniform(0.1, 0.9)
    tau = v0 * rng.uniform(0.0, 2.0)
    cap = convexity_cap(n, v0)
    B = 0.99 * cap
    return s, n, Hyperparameters(v0=v0, v1=v1, eta=eta, tau=tau, B=B)
