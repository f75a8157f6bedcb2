import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tsou.special import (SpecialFunctionDomainError, bessel_k, gauss_2f1,
                          log_gamma)

mpmath.mp.dps = 30


class TestLogGamma:
    def test_known_values(self):
        assert log_gamma(1.0) == 0.0
        assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-13)
        assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-13)

    def test_domain(self):
        with pytest.raises(SpecialFunctionDomainError):
            log_gamma(0.0)
        with pytest.raises(SpecialFunctionDomainError):
            log_gamma(-1.5)


class TestBesselK:
    def test_half_order_closed_form(self):
        # K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
        for x in (0.25, 1.0, 3.0, 20.0):
            expect = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
            assert bessel_k(0.5, x) == pytest.approx(expect, rel=1e-10)

    def test_order_one_quadrature(self):
        # integral representation K_eta(x) = int_0^inf exp(-x cosh t) cosh(eta t) dt
        val, _ = quad(lambda t: math.exp(-1.0 * math.cosh(t)) * math.cosh(t),
                      0, 30, epsabs=1e-14, limit=200)
        assert val == pytest.approx(0.601907230, abs=1e-9)
        assert bessel_k(1.0, 1.0) == pytest.approx(val, rel=1e-10)

    def test_order_symmetry(self):
        for eta in (0.5, 0.8, 1.3):
            assert bessel_k(-eta, 2.0) == bessel_k(eta, 2.0)

    def test_quadrature_grid(self):
        # pricing-relevant orders alpha + 1/2
        for alpha in (0.2, 0.5, 0.8):
            eta = alpha + 0.5
            for x in np.logspace(-2, 1.5, 7):
                val, _ = quad(lambda t: math.exp(-x * math.cosh(t))
                              * math.cosh(eta * t), 0, 40, epsabs=1e-14,
                              limit=300)
                assert bessel_k(eta, x) == pytest.approx(val, rel=1e-9)

    def test_domain(self):
        with pytest.raises(SpecialFunctionDomainError):
            bessel_k(0.5, 0.0)
        with pytest.raises(SpecialFunctionDomainError):
            bessel_k(0.5, -1.0)


def quadrature_2f1_aa(alpha: float, x: float) -> float:
    """Independent oracle for 2F1(-a,-a;1-a;x) on x < 0.

    The function is an antiderivative of the power kernel, which gives the
    cancellation-free identity F(-a,-a;1-a;-y) = 1 - a y^a I(y) with
    I(y) = int_0^y s^(-1-a) [(1+s)^a - 1] ds.
    """
    y = -x

    def f(s):
        return s ** (-1.0 - alpha) * math.expm1(alpha * math.log1p(s))

    if y <= 1.0:
        integral, _ = quad(f, 0.0, y, epsabs=1e-13, epsrel=1e-12, limit=400)
    else:
        head, _ = quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=400)
        tail, _ = quad(f, 1.0, y, epsabs=1e-13, epsrel=1e-12, limit=400)
        integral = head + tail
    return 1.0 - alpha * y ** alpha * integral


class TestGauss2F1:
    def test_at_zero(self):
        assert gauss_2f1(-0.5, -0.5, 0.5, 0.0) == 1.0
        assert gauss_2f1(1.0, 1.0, 0.5, 0.0) == 1.0

    def test_elementary_half_value(self):
        # closed form sqrt(x+1) - sqrt(x) asinh(sqrt(x)) at x = 2
        expect = math.sqrt(3.0) - math.sqrt(2.0) * math.asinh(math.sqrt(2.0))
        assert expect == pytest.approx(0.111057, abs=5e-7)
        assert gauss_2f1(-0.5, -0.5, 0.5, -2.0) == pytest.approx(expect, rel=1e-12)

    def test_elementary_half_sweep(self):
        for x in np.logspace(-6, 6, 25):
            expect = math.sqrt(x + 1.0) - math.sqrt(x) * math.asinh(math.sqrt(x))
            assert gauss_2f1(-0.5, -0.5, 0.5, -x) == pytest.approx(expect, rel=1e-10)

    def test_pattern_b_quadrature_oracle(self):
        # 2F1(1,1;1-a;x) = (1-x)^(-1-a) 2F1(-a,-a;1-a;x); the right side has
        # a direct power-kernel quadrature representation
        x = -4.0
        alpha = 0.5
        expect = (1.0 - x) ** (-1.0 - alpha) * quadrature_2f1_aa(alpha, x)
        assert gauss_2f1(1.0, 1.0, 0.5, x) == pytest.approx(expect, rel=1e-10)

    def test_pattern_a_quadrature_oracle(self):
        for alpha in (0.2, 0.65):
            for x in (-0.7, -3.0, -80.0, -1e4):
                assert gauss_2f1(-alpha, -alpha, 1 - alpha, x) == \
                    pytest.approx(quadrature_2f1_aa(alpha, x), rel=1e-9)

    @pytest.mark.parametrize("alpha", [0.2, 0.35, 0.5, 0.65, 0.8])
    def test_against_mpmath(self, alpha):
        xs = [-1e6, -7.3e4, -900.0, -51.0, -7.0, -0.9, -0.4, 1e-3, 0.45, 0.9]
        for x in xs:
            ref = float(mpmath.hyp2f1(-alpha, -alpha, 1 - alpha, x))
            assert gauss_2f1(-alpha, -alpha, 1 - alpha, x) == \
                pytest.approx(ref, rel=1e-12)
            ref_b = float(mpmath.hyp2f1(1, 1, 1 - alpha, x))
            assert gauss_2f1(1.0, 1.0, 1 - alpha, x) == \
                pytest.approx(ref_b, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.2, 0.35, 0.5, 0.65, 0.8])
    def test_transform_9_131_1_consistency(self, alpha):
        # F(-a,-a;1-a;x) = (1-x)^(1+a) F(1,1;1-a;x)
        for x in np.concatenate([-np.logspace(-2, 6, 30), np.linspace(0.05, 0.9, 8)]):
            lhs = gauss_2f1(-alpha, -alpha, 1 - alpha, float(x))
            rhs = (1.0 - x) ** (1.0 + alpha) * gauss_2f1(1.0, 1.0, 1 - alpha, float(x))
            assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_boundary_x_equal_one(self):
        alpha = 0.3
        expect = math.exp(math.lgamma(1 - alpha) + math.lgamma(1 + alpha))
        assert gauss_2f1(-alpha, -alpha, 1 - alpha, 1.0) == \
            pytest.approx(expect, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(SpecialFunctionDomainError):
            gauss_2f1(-0.5, -0.5, 0.5, 1.5)        # beyond the cut
        with pytest.raises(SpecialFunctionDomainError):
            gauss_2f1(1.0, 1.0, 0.5, 1.0)          # divergent boundary
        with pytest.raises(SpecialFunctionDomainError):
            gauss_2f1(1.0, 1.0, 0.0, 0.3)          # pole in c
        with pytest.raises(SpecialFunctionDomainError):
            gauss_2f1(0.3, 0.7, 1.2, 0.1)          # unsupported pattern

    @settings(max_examples=60, deadline=None)
    @given(alpha=st.floats(0.05, 0.95), y=st.floats(1e-8, 1e8))
    def test_transform_identity_property(self, alpha, y):
        val = gauss_2f1(-alpha, -alpha, 1 - alpha, -y)
        assert math.isfinite(val)
        via_b = (1.0 + y) ** (1.0 + alpha) * gauss_2f1(1.0, 1.0, 1 - alpha, -y)
        assert val == pytest.approx(via_b, rel=1e-9, abs=1e-12)
