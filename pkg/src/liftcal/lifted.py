"""Lifted linear fit of recorded (response, prediction) pairs.

Regressing held-out responses on a model's own predictions gives two
diagnostics with known sampling behaviour: the intercept is the model's
average bias and the slope its scale distortion. A well-generalising model
has (intercept, slope) near (0, 1); the consistency test formalises that
check against the l-infinity radius of the standard bivariate Student-t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDesignError,
    InsufficientDataError,
    InvalidInputError,
    InvalidParameterError,
    ShapeMismatchError,
)
from .stats import as_seed, bivariate_t_linf_quantile

__all__ = ["CalibrationSet", "LiftedFit", "ConsistencyTest", "fit_lifted_linear", "residuals", "consistency_test"]


@dataclass(frozen=True)
class CalibrationSet:
    """Paired response/prediction vectors held out from model training."""

    responses: np.ndarray
    predictions: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.responses, dtype=float)
        f = np.asarray(self.predictions, dtype=float)
        if y.ndim != 1 or f.ndim != 1:
            raise ShapeMismatchError("responses and predictions must be one-dimensional")
        if y.shape != f.shape:
            raise ShapeMismatchError(f"length mismatch: {y.shape[0]} responses vs {f.shape[0]} predictions")
        if y.shape[0] < 3:
            raise InsufficientDataError(f"need at least 3 calibration pairs, got {y.shape[0]}")
        if not (np.isfinite(y).all() and np.isfinite(f).all()):
            raise InvalidInputError("calibration data must be finite")
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "predictions", f)

    @property
    def n_calb(self) -> int:
        return self.responses.shape[0]


@dataclass(frozen=True)
class LiftedFit:
    """Ordinary-least-squares summary of the lifted linear model.

    beta0_hat is the average bias correction and beta1_hat the scale
    adjustment; sigma_u_hat is the residual scale on n_calb - 2 degrees of
    freedom. cov_scale holds (Z^T Z)^{-1} for the design Z = [1, predictions].
    """

    beta0_hat: float
    beta1_hat: float
    r_star: float
    s_y: float
    s_fhat: float
    mu_hat: float
    sigma_u_hat: float
    n_calb: int
    ss_fhat: float
    cov_scale: np.ndarray = field(repr=False)

    def predict(self, f0):
        """Adjusted point prediction beta0 + beta1 * f0."""
        return self.beta0_hat + self.beta1_hat * np.asarray(f0, dtype=float)


@dataclass(frozen=True)
class ConsistencyTest:
    """Outcome of the H0: (intercept, slope) = (0, 1) test."""

    statistic: float
    threshold: float
    alpha: float
    reject: bool


def fit_lifted_linear(calib: CalibrationSet) -> LiftedFit:
    """Fit responses = beta0 + beta1 * predictions + noise by least squares.

    Raises DegenerateDesignError when the predictions are constant (the
    slope is undefined; use a null model instead).
    """
    y = calib.responses
    f = calib.predictions
    n = calib.n_calb

    mu_hat = float(f.mean())
    ybar = float(y.mean())
    fc = f - mu_hat
    yc = y - ybar
    ss_fhat = float(fc @ fc)
    ss_y = float(yc @ yc)
    if ss_fhat == 0.0:
        raise DegenerateDesignError("constant predictions: lifted slope undefined")

    sxy = float(fc @ yc)
    beta1 = sxy / ss_fhat
    beta0 = ybar - beta1 * mu_hat

    s_y = math.sqrt(ss_y / (n - 1))
    s_fhat = math.sqrt(ss_fhat / (n - 1))
    r_star = sxy / math.sqrt(ss_fhat * ss_y) if ss_y > 0.0 else 0.0
    r_star = min(1.0, max(-1.0, r_star))

    resid = y - (beta0 + beta1 * f)
    sigma_u_hat = math.sqrt(float(resid @ resid) / (n - 2))

    # (Z^T Z)^{-1} in centered form
    cov_scale = np.array(
        [[1.0 / n + mu_hat**2 / ss_fhat, -mu_hat / ss_fhat], [-mu_hat / ss_fhat, 1.0 / ss_fhat]]
    )
    return LiftedFit(
        beta0_hat=beta0,
        beta1_hat=beta1,
        r_star=r_star,
        s_y=s_y,
        s_fhat=s_fhat,
        mu_hat=mu_hat,
        sigma_u_hat=sigma_u_hat,
        n_calb=n,
        ss_fhat=ss_fhat,
        cov_scale=cov_scale,
    )


def residuals(fit: LiftedFit, calib: CalibrationSet) -> np.ndarray:
    """Calibration residuals y - (beta0 + beta1 * prediction)."""
    if calib.n_calb != fit.n_calb:
        raise ShapeMismatchError(f"fit built on {fit.n_calb} pairs, calibration set has {calib.n_calb}")
    return calib.responses - fit.predict(calib.predictions)


def consistency_test(fit: LiftedFit, alpha: float, seed) -> ConsistencyTest:
    """Test H0: (beta0, beta1) = (0, 1) at significance level alpha.

    The deviation vector is studentized with (Z^T Z)^{1/2} / sigma_u_hat,
    which is exactly standard-bivariate-t distributed under H0 with
    n_calb - 2 degrees of freedom; its l-infinity norm is compared against
    the Monte Carlo radius from bivariate_t_linf_quantile.

    An exact fit (sigma_u_hat = 0) at (0, 1) yields statistic 0; an exact
    fit anywhere else is infinitely strong evidence and maps to +inf.
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if fit.n_calb < 4:
        raise InsufficientDataError("consistency test needs n_calb >= 4")

    threshold = bivariate_t_linf_quantile(alpha, fit.n_calb - 2, as_seed(seed)).value
    dev = np.array([fit.beta0_hat, fit.beta1_hat - 1.0])

    if fit.sigma_u_hat == 0.0:
        stat = 0.0 if dev[0] == 0.0 and dev[1] == 0.0 else math.inf
        return ConsistencyTest(statistic=stat, threshold=threshold, alpha=alpha, reject=stat > threshold)

    # (Z^T Z)^{1/2} via the eigendecomposition of cov_scale = (Z^T Z)^{-1}
    evals, evecs = np.linalg.eigh(fit.cov_scale)
    root = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
    stat = float(np.abs(root @ dev).max() / fit.sigma_u_hat)
    return ConsistencyTest(statistic=stat, threshold=threshold, alpha=alpha, reject=stat > threshold)
