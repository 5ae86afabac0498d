import math

import numpy as np
import pytest

from liftcal import (
    CalibrationSet,
    DegenerateDesignError,
    InsufficientDataError,
    Seed,
    ShapeMismatchError,
    consistency_test,
    fit_lifted_linear,
    residuals,
)

from oracles import ols_normal_equations


def make_lifted_data(rng, n, beta0=0.3, beta1=1.2, sigma_u=0.5, mu_f=0.0, sd_f=1.0):
    f = rng.normal(mu_f, sd_f, n)
    y = beta0 + beta1 * f + rng.normal(0.0, sigma_u, n)
    return CalibrationSet(y, f)


class TestFit:
    def test_exact_identity(self):
        fit = fit_lifted_linear(CalibrationSet([1.0, 2, 3, 4], [1.0, 2, 3, 4]))
        assert fit.beta0_hat == 0.0
        assert fit.beta1_hat == 1.0
        assert fit.r_star == 1.0
        assert fit.sigma_u_hat == 0.0

    def test_exact_affine(self):
        fit = fit_lifted_linear(CalibrationSet([1.0, 3, 5, 7], [0.0, 1, 2, 3]))
        assert fit.beta0_hat == pytest.approx(1.0, abs=1e-12)
        assert fit.beta1_hat == pytest.approx(2.0, abs=1e-12)
        assert fit.r_star == pytest.approx(1.0, abs=1e-12)

    def test_normal_equations_oracle(self):
        rng = np.random.default_rng(7)
        calib = make_lifted_data(rng, 500)
        fit = fit_lifted_linear(calib)
        b0, b1 = ols_normal_equations(calib.responses, calib.predictions)
        assert fit.beta0_hat == pytest.approx(b0, abs=1e-10)
        assert fit.beta1_hat == pytest.approx(b1, abs=1e-10)
        # within 4 standard errors of the generating truth
        se = fit.sigma_u_hat * np.sqrt(np.diag(fit.cov_scale))
        assert abs(fit.beta0_hat - 0.3) < 4 * se[0]
        assert abs(fit.beta1_hat - 1.2) < 4 * se[1]

    def test_sigma_identity(self):
        rng = np.random.default_rng(8)
        calib = make_lifted_data(rng, 93)
        fit = fit_lifted_linear(calib)
        n = fit.n_calb
        a2 = 1.0 + 1.0 / (n - 2)
        via_correlation = a2 * (1.0 - fit.r_star**2) * fit.s_y**2
        assert fit.sigma_u_hat**2 == pytest.approx(via_correlation, rel=1e-10)
        rss = float(residuals(fit, calib) @ residuals(fit, calib))
        assert fit.sigma_u_hat**2 == pytest.approx(rss / (n - 2), rel=1e-12)

    def test_affine_equivariance(self):
        rng = np.random.default_rng(9)
        calib = make_lifted_data(rng, 60)
        fit = fit_lifted_linear(calib)
        c, d = -2.5, 7.0
        fit2 = fit_lifted_linear(CalibrationSet(c * calib.responses + d, calib.predictions))
        assert fit2.beta1_hat == pytest.approx(c * fit.beta1_hat, rel=1e-10)
        assert fit2.beta0_hat == pytest.approx(c * fit.beta0_hat + d, rel=1e-10)
        assert fit2.r_star**2 == pytest.approx(fit.r_star**2, abs=1e-10)

    def test_cov_scale_positive_definite(self):
        rng = np.random.default_rng(10)
        fit = fit_lifted_linear(make_lifted_data(rng, 40, mu_f=3.0))
        evals = np.linalg.eigvalsh(fit.cov_scale)
        assert np.all(evals > 0)
        assert fit.cov_scale[0, 1] == fit.cov_scale[1, 0]

    def test_degenerate_design(self):
        with pytest.raises(DegenerateDesignError):
            fit_lifted_linear(CalibrationSet([1.0, 2, 3], [5.0, 5, 5]))

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            CalibrationSet([1.0, 2], [1.0, 2])


class TestResiduals:
    def test_perfect_fit_zero(self):
        calib = CalibrationSet([2.0, 4, 6, 8], [1.0, 2, 3, 4])
        fit = fit_lifted_linear(calib)
        assert np.allclose(residuals(fit, calib), 0.0, atol=1e-12)

    def test_matches_oracle_elementwise(self):
        rng = np.random.default_rng(11)
        calib = make_lifted_data(rng, 37)
        fit = fit_lifted_linear(calib)
        b0, b1 = ols_normal_equations(calib.responses, calib.predictions)
        expect = calib.responses - (b0 + b1 * calib.predictions)
        assert np.allclose(residuals(fit, calib), expect, atol=1e-12)

    def test_normal_equations_orthogonality(self):
        rng = np.random.default_rng(12)
        calib = make_lifted_data(rng, 210)
        r = residuals(fit_lifted_linear(calib), calib)
        scale = 1e-8 * calib.n_calb * np.abs(calib.responses).max()
        assert abs(r.sum()) < scale
        assert abs(r @ calib.predictions) < scale

    def test_length_mismatch(self):
        calib = make_lifted_data(np.random.default_rng(0), 10)
        other = make_lifted_data(np.random.default_rng(1), 11)
        with pytest.raises(ShapeMismatchError):
            residuals(fit_lifted_linear(calib), other)


class TestConsistencyTest:
    def test_exact_null_never_rejects(self):
        calib = CalibrationSet([1.0, 2, 3, 4], [1.0, 2, 3, 4])
        out = consistency_test(fit_lifted_linear(calib), 0.05, Seed(0))
        assert out.statistic == 0.0
        assert not out.reject

    def test_exact_fit_off_null_rejects(self):
        calib = CalibrationSet([1.0, 3, 5, 7], [0.0, 1, 2, 3])
        out = consistency_test(fit_lifted_linear(calib), 0.05, Seed(0))
        assert math.isinf(out.statistic)
        assert out.reject

    def test_power_under_independence(self):
        rejections = 0
        for s in range(100):
            rng = np.random.default_rng(1000 + s)
            calib = make_lifted_data(rng, 200, beta0=0.0, beta1=0.0, sigma_u=1.0)
            out = consistency_test(fit_lifted_linear(calib), 0.05, Seed(0))
            rejections += out.reject
        assert rejections >= 99

    def test_size_under_null(self):
        rejections = 0
        reps = 2000
        for s in range(reps):
            rng = np.random.default_rng(20_000 + s)
            calib = make_lifted_data(rng, 120, beta0=0.0, beta1=1.0, sigma_u=0.7)
            rejections += consistency_test(fit_lifted_linear(calib), 0.05, Seed(0)).reject
        assert abs(rejections / reps - 0.05) <= 0.02

    def test_needs_four_points(self):
        calib = CalibrationSet([1.0, 2, 3.5], [1.0, 2, 3])
        with pytest.raises(InsufficientDataError):
            consistency_test(fit_lifted_linear(calib), 0.05, Seed(0))


class TestNoiseLimit:
    """Fit drifts to (0, 1) as prediction noise vanishes."""

    TAUS = (1.0, 0.3, 0.1, 0.03)

    def _median_abs_devs(self):
        devs = {tau: [] for tau in self.TAUS}
        for s in range(50):
            rng = np.random.default_rng(500 + s)
            f = rng.normal(2.0, 1.0, 500)
            y = f + rng.normal(0.0, 0.1, 500)
            for tau in self.TAUS:
                fit = fit_lifted_linear(CalibrationSet(y, f + tau * rng.normal(0.0, 1.0, 500)))
                devs[tau].append((abs(fit.beta1_hat - 1.0), abs(fit.beta0_hat)))
        return {tau: np.median(np.array(v), axis=0) for tau, v in devs.items()}

    def test_monotone_and_small_at_fine_noise(self):
        med = self._median_abs_devs()
        b1 = [med[tau][0] for tau in self.TAUS]
        assert all(x > y for x, y in zip(b1, b1[1:]))
        assert med[0.03][0] <= 0.05
        assert med[0.03][0] < med[1.0][0]
