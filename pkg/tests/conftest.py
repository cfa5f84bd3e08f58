import numpy as np
import pytest


def random_spd(rng, p, ridge=1.0):
    a = rng.standard_normal((p, p))
    m = a.T @ a + ridge * np.eye(p)
    return (m + m.T) / 2


def random_sym(rng, p):
    a = rng.standard_normal((p, p))
    return (a + a.T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
