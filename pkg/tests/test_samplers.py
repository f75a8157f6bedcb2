import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import invgauss, kstest

from tsou import kernels
from tsou.process import mixture_density
from tsou.rng import RngStream, TsLaw, sample_ts, sample_v, sample_v_batch


def ts_cumulant_quadrature(k: int, alpha: float, beta: float, mass: float) -> float:
    """k-th cumulant of the tempered stable law by Levy-density quadrature."""
    val, _ = quad(lambda x: x ** (k - 1.0 - alpha) * math.exp(-beta * x),
                  0, np.inf, epsabs=1e-14, limit=300)
    return mass * val


class TestTemperedStable:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
    def test_cumulants_match_quadrature(self, alpha):
        beta, mass = 0.46, 0.068
        n = 10 ** 6
        out = np.empty(n)
        kernels.ts_draws(7, 0, n, alpha, beta, mass, math.lgamma(1 - alpha), out)
        k1 = ts_cumulant_quadrature(1, alpha, beta, mass)
        k2 = ts_cumulant_quadrature(2, alpha, beta, mass)
        se1 = out.std(ddof=1) / math.sqrt(n)
        assert abs(out.mean() - k1) < 3 * se1
        m = out.mean()
        var = out.var(ddof=1)
        m4 = ((out - m) ** 4).mean()
        se2 = math.sqrt(max(m4 - var ** 2, 0.0) / n)
        assert abs(var - k2) < 3 * se2

    def test_vanishing_mass_limit(self):
        for alpha in (0.3, 0.5):
            n = 10 ** 5
            out = np.empty(n)
            kernels.ts_draws(3, 0, n, alpha, 0.46, 1e-12,
                             math.lgamma(1 - alpha), out)
            assert (out > 1e-6).mean() < 1e-3

    def test_zero_mass_is_zero(self):
        rng = RngStream(1, 0)
        assert sample_ts(rng, TsLaw(0.3, 1.0, 0.0)) == 0.0

    def test_half_alpha_is_inverse_gaussian(self):
        # alpha = 1/2 draws must follow the IG law with the mapped parameters
        alpha, beta, mass = 0.5, 0.46, 0.068
        n = 50000
        out = np.empty(n)
        kernels.ts_draws(11, 0, n, alpha, beta, mass, math.lgamma(0.5), out)
        mu = mass * math.sqrt(math.pi / beta)
        lam = 2.0 * beta * mu * mu
        stat = kstest(out, lambda x: invgauss.cdf(x, mu / lam, scale=lam)).statistic
        assert stat < 1.63 / math.sqrt(n)

    def test_tslaw_cumulant_helper(self):
        law = TsLaw(0.3, 0.46, 0.068)
        assert law.cumulant(1) == pytest.approx(
            ts_cumulant_quadrature(1, 0.3, 0.46, 0.068), rel=1e-9)
        assert law.cumulant(2) == pytest.approx(
            ts_cumulant_quadrature(2, 0.3, 0.46, 0.068), rel=1e-9)


class TestMixtureRate:
    def test_support(self):
        omega, alpha = 0.4346, 0.5
        draws = sample_v_batch(5, 0, 10 ** 5, omega, alpha)
        assert draws.min() >= 1.0
        assert draws.max() <= 1.0 / omega

    def test_cdf_against_quadrature(self):
        omega, alpha = 0.4346, 0.5
        n = 10 ** 5
        draws = sample_v_batch(5, 1, n, omega, alpha)
        cdf_at, _ = quad(lambda v: mixture_density(v, omega, alpha), 1.0, 1.5,
                         epsabs=1e-12)
        emp = (draws <= 1.5).mean()
        # binomial 3-sigma band
        assert abs(emp - cdf_at) < 3 * math.sqrt(cdf_at * (1 - cdf_at) / n)

    def test_kolmogorov_smirnov(self):
        omega, alpha = 0.4346, 0.5
        n = 10 ** 5
        draws = sample_v_batch(5, 2, n, omega, alpha)
        grid = np.linspace(1.0, 1.0 / omega, 2049)
        pdf = mixture_density(grid, omega, alpha)
        cdf = np.concatenate(([0.0], np.cumsum((pdf[1:] + pdf[:-1]) / 2
                                               * np.diff(grid))))
        cdf /= cdf[-1]
        stat = kstest(draws, lambda x: np.interp(x, grid, cdf)).statistic
        assert stat < 1.63 / math.sqrt(n)   # 1% level

    def test_collapsing_support(self):
        draws = sample_v_batch(7, 0, 20000, 0.999, 0.5)
        assert abs(draws.mean() - 1.0) < 1e-3

    @settings(max_examples=25, deadline=None)
    @given(omega=st.floats(0.05, 0.99), alpha=st.floats(0.1, 0.9))
    def test_density_normalization(self, omega, alpha):
        val, _ = quad(lambda v: mixture_density(v, omega, alpha), 1.0,
                      1.0 / omega, epsabs=1e-12, limit=200)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_scalar_validation(self):
        rng = RngStream(1, 0)
        with pytest.raises(ValueError):
            sample_v(rng, 1.5, 0.5)
        with pytest.raises(ValueError):
            sample_v(rng, 0.5, 1.5)
        assert 1.0 <= sample_v(rng, 0.4346, 0.5) <= 1.0 / 0.4346
