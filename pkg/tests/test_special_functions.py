"""Heat kernel and renewal density: examples, asymptotics, dual-scheme checks."""

import math

import numpy as np
import pytest

from shflab.special_functions import (
    DickmanParams,
    GthetaInterpolant,
    cached_interpolant,
    g_theta,
    g_theta_integral,
    heat_kernel,
    integrate_against_renewal_density,
)

from _oracles import dickman_density_substitution, quad2d


class TestHeatKernel:
    def test_origin_value(self):
        assert heat_kernel(1.0, (0.0, 0.0)) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-12)

    def test_direct_substitution(self):
        assert heat_kernel(0.5, (1.0, 0.0)) == pytest.approx(math.exp(-1.0) / math.pi, rel=1e-12)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            heat_kernel(0.0, (0.0, 0.0))
        with pytest.raises(ValueError):
            heat_kernel(-1.0, (1.0, 1.0))

    def test_chapman_kolmogorov(self):
        # int g_1(z) g_{a/2}(x - z) dz = g_{(2+a)/2}(x) at a = 0.6, x = (0.3, -0.2)
        a = 0.6
        x = np.array([0.3, -0.2])

        def f(z1, z2):
            z = np.stack([z1, z2], axis=-1)
            return heat_kernel(1.0, z) * heat_kernel(a / 2.0, x - z)

        lhs = quad2d(f, -10.0, 10.0, n=120)
        rhs = heat_kernel((2.0 + a) / 2.0, x)
        assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_normalization_on_disk(self):
        # mass on a box of half-width 12*sqrt(t) is 1 within 1e-8
        for t in (0.25, 1.0, 3.0):
            r = 12.0 * math.sqrt(t)

            def f(z1, z2, t=t):
                return heat_kernel(t, np.stack([z1, z2], axis=-1))

            assert quad2d(f, -r, r, n=160) == pytest.approx(1.0, abs=1e-8)


class TestDickmanParams:
    def test_euler_gamma_pinned(self):
        with pytest.raises(ValueError):
            DickmanParams(theta=0.0, euler_gamma=0.5772)

    def test_rel_tol_range(self):
        with pytest.raises(ValueError):
            DickmanParams(theta=0.0, rel_tol=0.0)
        with pytest.raises(ValueError):
            DickmanParams(theta=0.0, rel_tol=1e-2)

    def test_theta_outside_tested_range_warns(self):
        with pytest.warns(UserWarning):
            DickmanParams(theta=7.5)


class TestRenewalDensity:
    def test_domain(self):
        p = DickmanParams(theta=0.0)
        for bad in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                g_theta(p, bad)
            with pytest.raises(ValueError):
                g_theta_integral(p, bad)

    def test_small_t_asymptotic_theta0(self):
        p = DickmanParams(theta=0.0)
        t = 1e-6
        val = g_theta(p, t) * t * math.log(1.0 / t) ** 2
        assert 0.97 <= val <= 1.03

    def test_small_t_first_correction_theta1(self):
        p = DickmanParams(theta=1.0)
        t = 1e-8
        ell = math.log(1.0 / t)
        excess = g_theta(p, t) * t * ell**2 - 1.0
        assert excess == pytest.approx(2.0 * 1.0 / ell, abs=0.02)

    def test_dual_scheme_agreement(self):
        p = DickmanParams(theta=0.0)
        direct = g_theta(p, 0.5)
        substituted = dickman_density_substitution(0.0, 0.5)
        assert direct == pytest.approx(substituted, rel=1e-8)

    @pytest.mark.parametrize("theta", [-5.0, -1.0, 0.0, 1.0, 5.0])
    def test_positive(self, theta):
        p = DickmanParams(theta=theta)
        for t in (1e-7, 1e-3, 0.1, 0.5, 1.0):
            assert g_theta(p, t) > 0.0

    @pytest.mark.parametrize("theta", [-1.0, 0.0, 1.0])
    @pytest.mark.parametrize("t", [1e-5, 1e-6, 1e-7])
    def test_asymptotic_law_with_allowance(self, theta, t):
        # |G*t*log^2(1/t) - 1 - 2 theta/log(1/t)| <= 5/log^2(1/t)
        p = DickmanParams(theta=theta)
        ell = math.log(1.0 / t)
        lhs = abs(g_theta(p, t) * t * ell**2 - 1.0 - 2.0 * theta / ell)
        assert lhs <= 5.0 / ell**2

    def test_truncation_certified_by_doubling(self):
        base = DickmanParams(theta=1.0, s_max=32.0, rel_tol=1e-10)
        doubled = DickmanParams(theta=1.0, s_max=64.0, rel_tol=1e-10)
        for t in (1e-5, 0.3, 1.0):
            assert g_theta(base, t) == pytest.approx(g_theta(doubled, t), rel=5e-10)


class TestRenewalIntegral:
    def test_small_t_asymptotic(self):
        p = DickmanParams(theta=0.0)
        t = 1e-4
        assert 0.97 <= g_theta_integral(p, t) * math.log(1.0 / t) <= 1.03

    def test_lower_bound_at_inverse_5m(self):
        p = DickmanParams(theta=0.0)
        m = 10**4
        assert g_theta_integral(p, 1.0 / (5.0 * m)) >= 1.0 / (2.0 * math.log(m))

    def test_matches_direct_integration_of_density(self):
        # independent route: integrate g_theta itself over (0, 0.3] after the
        # v = 1/log(e/u) substitution that removes the endpoint singularity
        p = DickmanParams(theta=0.0)
        direct = integrate_against_renewal_density(lambda u: 1.0, 0.3, p)
        assert g_theta_integral(p, 0.3) == pytest.approx(direct, rel=1e-6)

    @pytest.mark.parametrize("t", [0.01, 0.1, 0.5])
    def test_fundamental_theorem(self, t):
        p = DickmanParams(theta=0.5)
        h = 1e-5 * t
        deriv = (g_theta_integral(p, t + h) - g_theta_integral(p, t - h)) / (2.0 * h)
        assert deriv == pytest.approx(g_theta(p, t), rel=1e-4)


class TestInterpolant:
    def test_matches_certified_quadrature(self):
        p = DickmanParams(theta=1.0)
        interp = GthetaInterpolant(p)
        for u in np.geomspace(1e-7, 1.0, 40):
            assert interp.log_g(u) == pytest.approx(math.log(g_theta(p, u)), abs=1e-7)

    def test_vectorized_matches_scalar(self):
        interp = cached_interpolant(0.0)
        us = np.geomspace(1e-5, 1.0, 17)
        vec = interp.log_g(us)
        scal = np.array([interp.log_g(float(u)) for u in us])
        np.testing.assert_allclose(vec, scal, rtol=0, atol=0)

    def test_deep_tail_uses_asymptotic_branch(self):
        interp = cached_interpolant(0.5)
        u = 1e-120
        ell = math.log(1.0 / u)
        expected = -math.log(u) - 2.0 * math.log(ell) + math.log1p(2.0 * 0.5 / ell)
        assert interp.log_g(u) == pytest.approx(expected, rel=1e-12)
