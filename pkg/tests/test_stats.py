import math

import numpy as np
import pytest
from scipy import stats as sps

from liftcal import (
    InvalidParameterError,
    NoiseFamily,
    Seed,
    bivariate_t_linf_quantile,
    noise_logpdf,
    noise_sample,
    normal_quantile,
    t_cdf,
    t_quantile,
)

from oracles import t_cdf_quadrature, t_quantile_quadrature

EULER_GAMMA = 0.5772156649015329


class TestTCdf:
    def test_symmetry_point(self):
        assert t_cdf(0.0, 5) == 0.5

    def test_upper_limit(self):
        assert t_cdf(math.inf, 3) == 1.0
        assert t_cdf(1e12, 7) == pytest.approx(1.0, abs=1e-12)

    def test_cauchy_analytic(self):
        # df=1 is Cauchy: F(x) = 1/2 + atan(x)/pi
        for x in (-3.0, -0.5, 0.7, 2.0, 9.0):
            assert t_cdf(x, 1) == pytest.approx(0.5 + math.atan(x) / math.pi, abs=1e-14)
        assert t_cdf(2.0, 1) == pytest.approx(0.85242, abs=5e-6)

    def test_against_quadrature(self):
        for df in (2, 5, 30):
            for x in (-4.0, -1.2, 0.3, 2.5):
                assert t_cdf(x, df) == pytest.approx(t_cdf_quadrature(x, df), abs=1e-10)

    def test_monotone(self):
        xs = np.linspace(-8, 8, 200)
        vals = [t_cdf(x, 4) for x in xs]
        assert np.all(np.diff(vals) >= 0)

    def test_df_zero_rejected(self):
        with pytest.raises(InvalidParameterError):
            t_cdf(1.0, 0)


class TestTQuantile:
    def test_median(self):
        assert t_quantile(0.5, 7) == 0.0

    def test_cauchy_analytic(self):
        assert t_quantile(0.975, 1) == pytest.approx(math.tan(math.pi * 0.475), rel=1e-10)
        assert t_quantile(0.975, 1) == pytest.approx(12.70620, abs=5e-5)

    def test_frozen_tabulated_value(self):
        assert t_quantile(0.975, 10) == pytest.approx(2.228139, abs=1e-6)

    def test_quadrature_inversion_oracle(self):
        for df in (1, 3, 10, 50):
            for p in (0.05, 0.3, 0.8, 0.975):
                assert t_quantile(p, df) == pytest.approx(t_quantile_quadrature(p, df), abs=1e-6)

    def test_roundtrip_grid(self):
        for df in (1, 2, 5, 20, 100, 200):
            for p in np.arange(0.01, 1.0, 0.01):
                assert abs(t_cdf(t_quantile(p, df), df) - p) < 1e-9

    def test_symmetry(self):
        for df in (1, 4, 33):
            for p in (0.6, 0.9, 0.99):
                assert abs(t_quantile(1 - p, df) + t_quantile(p, df)) < 1e-12

    def test_strictly_increasing(self):
        qs = [t_quantile(p, 6) for p in np.linspace(0.02, 0.98, 49)]
        assert np.all(np.diff(qs) > 0)

    def test_normal_limit(self):
        for p in (0.05, 0.5, 0.83, 0.975):
            assert abs(t_quantile(p, 10_000) - normal_quantile(p)) <= 1e-3

    def test_bad_p_rejected(self):
        for p in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(InvalidParameterError):
                t_quantile(p, 5)


class TestNormalQuantile:
    def test_median(self):
        assert normal_quantile(0.5) == 0.0

    def test_tabulated(self):
        assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)

    def test_phi_of_one(self):
        assert normal_quantile(0.841345) == pytest.approx(1.0, abs=1e-5)

    def test_bad_p_rejected(self):
        with pytest.raises(InvalidParameterError):
            normal_quantile(1.0)


class TestBivariateTQuantile:
    def test_high_alpha_small_radius(self):
        q = bivariate_t_linf_quantile(0.999, 10, Seed(4), draws=100_000)
        assert 0.0 <= q.value < 0.1

    def test_gaussian_limit(self):
        # independent-components limit solves (2*Phi(T) - 1)^2 = 0.95
        q = bivariate_t_linf_quantile(0.05, 100_000, Seed(2))
        assert q.value == pytest.approx(2.2365, abs=3 * q.std_error + 1e-3)

    def test_against_large_oracle(self):
        q = bivariate_t_linf_quantile(0.05, 20, Seed(1))
        oracle = bivariate_t_linf_quantile(0.05, 20, Seed(987_654), draws=10_000_000)
        tol = 3.0 * math.hypot(q.std_error, oracle.std_error)
        assert abs(q.value - oracle.value) <= tol

    def test_deterministic(self):
        a = bivariate_t_linf_quantile(0.1, 7, Seed(9), draws=50_000)
        b = bivariate_t_linf_quantile(0.1, 7, Seed(9), draws=50_000)
        assert a == b


class TestNoiseFamily:
    def test_gaussian_logpdf(self):
        assert noise_logpdf(0.0, NoiseFamily("gaussian")) == pytest.approx(-0.9189385332046727, abs=1e-12)

    def test_gumbel_logpdf(self):
        assert noise_logpdf(0.0, NoiseFamily("gumbel")) == pytest.approx(-1.0, abs=1e-14)
        assert noise_logpdf(0.0, NoiseFamily("gumbel", scale=2.0)) == pytest.approx(-1.0 - math.log(2.0), abs=1e-14)

    def test_bad_scale_rejected(self):
        with pytest.raises(InvalidParameterError):
            NoiseFamily("gaussian", scale=0.0)
        with pytest.raises(InvalidParameterError):
            NoiseFamily("gumbel", scale=-1.0)

    def test_sample_empty(self):
        out = noise_sample(NoiseFamily("gaussian"), 0, Seed(1))
        assert out.shape == (0,)

    def test_gaussian_sample_mean(self):
        x = noise_sample(NoiseFamily("gaussian"), 1_000_000, Seed(5))
        assert abs(x.mean()) < 0.005

    def test_gumbel_sample_mean(self):
        x = noise_sample(NoiseFamily("gumbel"), 1_000_000, Seed(6))
        assert abs(x.mean() - EULER_GAMMA) < 0.01

    def test_bit_identical_given_seed(self):
        a = noise_sample(NoiseFamily("gumbel", scale=1.5), 1000, Seed(3))
        b = noise_sample(NoiseFamily("gumbel", scale=1.5), 1000, Seed(3))
        assert np.array_equal(a, b)

    def test_ks_distance(self):
        g = noise_sample(NoiseFamily("gaussian"), 100_000, Seed(11))
        assert sps.kstest(g, "norm").statistic <= 0.01
        u = noise_sample(NoiseFamily("gumbel", scale=2.0), 100_000, Seed(12))
        assert sps.kstest(u, "gumbel_r", args=(0.0, 2.0)).statistic <= 0.01
