import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bagus.errors import NotPositiveDefiniteError
from bagus.penalty import (Hyperparameters, convexity_cap, inclusion_prob, objective,
                           pen_ss, pen_ss_grad, pen_ss_hess, subgradient_interval)

from conftest import random_spd

H = Hyperparameters(v0=0.1, v1=1.0, eta=0.5)

# v1 > v0 required by the type; "v0 == v1" cases use the unchecked constructor
def equal_scales(v, eta=0.5, tau=0.0):
    h = object.__new__(Hyperparameters)
    for k, val in dict(v0=v, v1=v, eta=eta, tau=tau, B=None, inner_tol=1e-6,
                       outer_tol=1e-4, max_inner=100, max_outer=100,
                       constraint="spectral").items():
        object.__setattr__(h, k, val)
    return h


hypers = st.builds(
    lambda v0, ratio, eta: Hyperparameters(v0=v0, v1=v0 * ratio, eta=eta),
    st.floats(0.01, 1.0), st.floats(1.1, 100.0), st.floats(0.05, 0.95))


class TestHyperparameters:
    @pytest.mark.parametrize("kw", [dict(v0=1.0, v1=0.5), dict(v0=0.1, v1=1, eta=1.0),
                                    dict(v0=0.1, v1=1, tau=-1.0), dict(v0=0.1, v1=1, B=0.0),
                                    dict(v0=0.1, v1=1, max_inner=0),
                                    dict(v0=0.1, v1=1, constraint="bogus")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            Hyperparameters(**kw)

    def test_tau_defaults_to_v0(self):
        assert Hyperparameters(v0=0.2, v1=1.0).tau == 0.2

    def test_resolved_bound(self):
        h = Hyperparameters(v0=0.005, v1=1.0).resolved(100)
        assert h.B == pytest.approx(0.99)


class TestPenSS:
    def test_collapses_to_laplace(self):
        v = 0.7
        h = equal_scales(v, eta=0.3)
        for t in (-2.0, 0.0, 0.4, 3.0):
            assert pen_ss(t, h) == pytest.approx(abs(t) / v + math.log(2 * v), abs=1e-13)

    @given(st.floats(-50, 50), hypers)
    def test_even(self, t, h):
        assert pen_ss(-t, h) == pen_ss(t, h)

    def test_extended_precision(self):
        mpmath.mp.dps = 50
        eta, v0, v1, t = mpmath.mpf("0.5"), mpmath.mpf("0.1"), mpmath.mpf(1), mpmath.mpf("0.5")
        ref = -mpmath.log(eta / (2 * v1) * mpmath.exp(-t / v1)
                          + (1 - eta) / (2 * v0) * mpmath.exp(-t / v0))
        assert abs(pen_ss(0.5, H) - float(ref)) < 1e-12
        assert abs(pen_ss(0.5, H) - 1.7809528767989783) < 1e-12

    def test_no_underflow_far_out(self):
        h = Hyperparameters(v0=1e-3, v1=1.0)
        t = 50.0
        assert pen_ss(t, h) == pytest.approx(t / h.v1 - math.log(h.eta / (2 * h.v1)), rel=1e-12)

    @given(st.floats(-20, 20), hypers)
    def test_bounded_increase(self, t, h):
        d = pen_ss(t, h) - pen_ss(0.0, h)
        assert -1e-12 <= d <= abs(t) / h.v0 + 1e-9

    @given(st.floats(0, 10), st.floats(0, 10), hypers)
    def test_nondecreasing_in_abs(self, a, b, h):
        lo, hi = sorted((a, b))
        assert pen_ss(lo, h) <= pen_ss(hi, h) + 1e-12


class TestGradient:
    def test_large_theta_limit(self):
        assert pen_ss_grad(50.0, H) == pytest.approx(1.0 / H.v1)
        assert pen_ss_grad(-50.0, H) == pytest.approx(-1.0 / H.v1)

    def test_equal_scales(self):
        h = equal_scales(0.4)
        for t in (-3.0, -0.1, 0.2, 5.0):
            assert pen_ss_grad(t, h) == pytest.approx(math.copysign(1 / 0.4, t))

    def test_finite_difference(self):
        step = 1e-6
        fd = (pen_ss(0.5 + step, H) - pen_ss(0.5 - step, H)) / (2 * step)
        assert abs(pen_ss_grad(0.5, H) - fd) < 1e-6

    def test_zero_is_rejected(self):
        with pytest.raises(ValueError):
            pen_ss_grad(0.0, H)

    @given(st.floats(1e-6, 30), st.floats(1e-6, 30), hypers)
    def test_magnitude_range_and_decay(self, a, b, h):
        lo, hi = sorted((a, b))
        g_lo, g_hi = pen_ss_grad(lo, h), pen_ss_grad(hi, h)
        lam0 = subgradient_interval(h)[1]
        assert 1 / h.v1 - 1e-12 <= g_hi <= g_lo + 1e-12
        assert g_lo <= lam0 + 1e-12


class TestSubgradient:
    def test_equal_scales(self):
        lo, hi = subgradient_interval(equal_scales(0.25))
        assert (lo, hi) == pytest.approx((-4.0, 4.0))

    def test_pure_spike(self):
        h = Hyperparameters(v0=0.2, v1=2.0, eta=1e-12)
        assert subgradient_interval(h) == pytest.approx((-5.0, 5.0))

    def test_one_sided_difference(self):
        h = Hyperparameters(v0=0.1, v1=10.0, eta=0.5)
        t = 1e-9
        fd = (pen_ss(t, h) - pen_ss(0.0, h)) / t
        lo, hi = subgradient_interval(h)
        assert abs(hi - fd) < 1e-5
        assert abs(lo + fd) < 1e-5


class TestHessian:
    def test_equal_scales_zero(self):
        assert pen_ss_hess(0.3, equal_scales(0.5)) == 0.0

    def test_finite_difference(self):
        step = 1e-4
        t = 0.3
        fd = (pen_ss(t + step, H) - 2 * pen_ss(t, H) + pen_ss(t - step, H)) / step**2
        assert abs(pen_ss_hess(t, H) - fd) < 1e-5

    @given(st.floats(1e-6, 20), hypers)
    def test_curvature_bound(self, t, h):
        c = 1 / h.v0 - 1 / h.v1
        assert abs(pen_ss_hess(t, h)) <= c * c / 4 * (1 + 1e-12)


class TestInclusionProb:
    def test_symmetric_mixture(self):
        h = equal_scales(0.3, eta=0.5)
        for t in (-1.0, 0.0, 2.0):
            assert inclusion_prob(t, h) == pytest.approx(0.5)

    def test_value_at_zero(self):
        h = Hyperparameters(v0=0.1, v1=10.0, eta=0.5)
        assert inclusion_prob(0.0, h) == pytest.approx(1 / 101, abs=1e-15)

    @given(st.floats(-5, 5), hypers)
    def test_ratio_form(self, t, h):
        a = abs(t)
        slab = h.eta / (2 * h.v1) * math.exp(-a / h.v1)
        spike = (1 - h.eta) / (2 * h.v0) * math.exp(-a / h.v0)
        if slab + spike > 0:
            assert abs(inclusion_prob(t, h) - slab / (slab + spike)) < 1e-12

    @given(hypers)
    def test_monotone(self, h):
        assert inclusion_prob(1.0, h) >= inclusion_prob(0.5, h)

    def test_strictly_inside_unit_interval(self):
        p = inclusion_prob(np.array([0.0, 1.0, 100.0]), H)
        assert np.all(p > 0) and np.all(p < 1)


def _objective_loops(theta, s, n, h):
    p = theta.shape[0]
    tr = sum(s[i, j] * theta[j, i] for i in range(p) for j in range(p))
    sign, logdet = np.linalg.slogdet(theta)
    assert sign > 0
    total = 0.5 * n * (tr - logdet)
    for i in range(p):
        for j in range(i + 1, p):
            a = abs(theta[i, j])
            total -= math.log(h.eta / (2 * h.v1) * math.exp(-a / h.v1)
                              + (1 - h.eta) / (2 * h.v0) * math.exp(-a / h.v0))
        total += h.tau * theta[i, i]
    return total


class TestObjective:
    def test_identity(self):
        h = Hyperparameters(v0=0.1, v1=1.0, tau=0.0)
        n, p = 30, 4
        expected = n / 2 * p + p * (p - 1) / 2 * pen_ss(0.0, h)
        assert objective(np.eye(p), np.eye(p), n, h) == pytest.approx(expected, abs=1e-12)

    def test_term_by_term(self, rng):
        h = Hyperparameters(v0=0.05, v1=0.8, eta=0.3, tau=0.2)
        theta = random_spd(rng, 4)
        s = random_spd(rng, 4)
        assert abs(objective(theta, s, 25, h) - _objective_loops(theta, s, 25, h)) < 1e-10

    def test_descends_toward_mle(self, rng):
        h = Hyperparameters(v0=1e6, v1=1e7, tau=0.0)
        s = random_spd(rng, 3)
        target = np.linalg.inv(s)
        vals = [objective((1 - a) * np.eye(3) + a * target, s, 40, h)
                for a in np.linspace(0, 1, 11)]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefiniteError):
            objective(np.diag([1.0, -1.0]), np.eye(2), 10, H)

    def test_midpoint_convexity_in_ball(self):
        rng = np.random.default_rng(7)
        n = 50
        h = Hyperparameters(v0=0.1, v1=1.0, tau=0.1)
        cap = 0.99 * convexity_cap(n, h.v0)
        s = random_spd(rng, 4, ridge=0.5) / 4
        failures = 0
        for _ in range(20):
            pair = []
            for _ in range(2):
                m = random_spd(rng, 4, ridge=0.2)
                m *= rng.uniform(0.2, 0.95) * cap / np.linalg.eigvalsh(m)[-1]
                pair.append(m)
            a, b = pair
            mid = objective((a + b) / 2, s, n, h)
            if mid > (objective(a, s, n, h) + objective(b, s, n, h)) / 2 + 1e-9:
                failures += 1
        assert failures == 0


class TestConvexityCap:
    def test_values(self):
        assert convexity_cap(100, 0.005) == pytest.approx(1.0)
        assert convexity_cap(200, 0.01) == pytest.approx(2.0)

    @given(st.integers(1, 10**6), st.floats(1e-6, 10))
    def test_scaling(self, n, v0):
        assert convexity_cap(2 * n, v0) == pytest.approx(math.sqrt(2) * convexity_cap(n, v0))
