"""Point-wise prediction intervals from a lifted linear fit.

The two-sided band for a new prediction f0 is

    beta0 + beta1*f0  +/-  a * sqrt((1 - R^2) s_y^2 eta(f0)) * t_{n-2, 1-alpha/2}

with a^2 = 1 + 1/(n - 2) and eta(f0) = 1 + 1/n + (f0 - mu)^2 / SS the
widening factor for points far from the calibration mean prediction. Width
shrinks as the response/prediction correlation approaches one. Empirical
coverage against nominal levels gives the reliability curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDesignError, InvalidInputError, InvalidParameterError, ShapeMismatchError
from .lifted import CalibrationSet, LiftedFit
from .stats import t_quantile

__all__ = [
    "Interval",
    "ReliabilityCurve",
    "eta_hat",
    "prediction_interval",
    "prediction_intervals",
    "mspe_bound_estimate",
    "empirical_coverage",
    "reliability_curve",
]

METHOD_STUDENT_T = "student_t"
METHOD_MCMC = "mcmc"


@dataclass(frozen=True)
class Interval:
    """Two-sided interval for one out-of-sample response."""

    center: float
    lower: float
    upper: float
    level: float
    method: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvalidInputError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y) -> bool:
        return bool(self.lower <= y <= self.upper)


@dataclass(frozen=True)
class ReliabilityCurve:
    """Empirical coverage achieved at each nominal confidence level."""

    levels: np.ndarray
    empirical: np.ndarray

    def max_deviation(self) -> float:
        return float(np.abs(self.empirical - self.levels).max())


def eta_hat(fit: LiftedFit, f0: float) -> float:
    """Interval-widening factor 1 + 1/n + (f0 - mu)^2 / SS; always >= 1."""
    if fit.ss_fhat <= 0.0:
        raise DegenerateDesignError("zero prediction spread: widening factor undefined")
    d = float(f0) - fit.mu_hat
    return 1.0 + 1.0 / fit.n_calb + d * d / fit.ss_fhat


def _half_width_scale(fit: LiftedFit, alpha: float) -> float:
    """a * sqrt((1 - R^2) s_y^2) * t_{n-2, 1-alpha/2}; multiply by sqrt(eta)."""
    n = fit.n_calb
    a = math.sqrt(1.0 + 1.0 / (n - 2))
    one_minus_r2 = max(0.0, 1.0 - fit.r_star**2)
    return a * math.sqrt(one_minus_r2 * fit.s_y**2) * t_quantile(1.0 - alpha / 2.0, n - 2)


def prediction_interval(fit: LiftedFit, f0: float, alpha: float) -> Interval:
    """Two-sided (1 - alpha) interval for the response at prediction f0.

    An exact fit (sigma_u_hat = 0) degenerates continuously to a zero-width
    interval at the adjusted prediction.
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    center = float(fit.predict(f0))
    half = _half_width_scale(fit, alpha) * math.sqrt(eta_hat(fit, f0))
    return Interval(center=center, lower=center - half, upper=center + half, level=1.0 - alpha, method=METHOD_STUDENT_T)


def prediction_intervals(fit: LiftedFit, f0s, alpha: float) -> list[Interval]:
    """Vectorised batch of prediction_interval over many new predictions."""
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    f0s = np.asarray(f0s, dtype=float)
    if fit.ss_fhat <= 0.0:
        raise DegenerateDesignError("zero prediction spread: widening factor undefined")
    centers = fit.predict(f0s)
    eta = 1.0 + 1.0 / fit.n_calb + (f0s - fit.mu_hat) ** 2 / fit.ss_fhat
    half = _half_width_scale(fit, alpha) * np.sqrt(eta)
    level = 1.0 - alpha
    return [
        Interval(center=float(c), lower=float(c - h), upper=float(c + h), level=level, method=METHOD_STUDENT_T)
        for c, h in zip(centers, half)
    ]


def mspe_bound_estimate(fit: LiftedFit, f0: float) -> float:
    """Plug-in estimate sigma_u_hat^2 * eta(f0) of the conditional prediction variance.

    This is the computable part of the mean-squared-prediction-error lower
    bound; the population terms it omits are not estimable from the
    calibration set alone, so treat it as a diagnostic estimate.
    """
    return fit.sigma_u_hat**2 * eta_hat(fit, f0)


def empirical_coverage(intervals: Sequence[Interval], y0) -> float:
    """Fraction of responses falling inside their paired interval."""
    y0 = np.asarray(y0, dtype=float)
    if len(intervals) == 0 or y0.size == 0:
        raise InvalidInputError("empirical coverage needs at least one (interval, response) pair")
    if len(intervals) != y0.size:
        raise ShapeMismatchError(f"{len(intervals)} intervals vs {y0.size} responses")
    lower = np.array([iv.lower for iv in intervals])
    upper = np.array([iv.upper for iv in intervals])
    return float(np.mean((lower <= y0) & (y0 <= upper)))


def reliability_curve(fit: LiftedFit, test: CalibrationSet, levels) -> ReliabilityCurve:
    """Empirical coverage at each nominal level over a held-out test set.

    ``levels`` must be sorted ascending, each strictly inside (0, 1).
    Intervals at higher levels nest the lower ones, so the empirical curve
    is nondecreasing by construction.
    """
    levels = np.asarray(levels, dtype=float)
    if levels.size == 0:
        raise InvalidInputError("need at least one confidence level")
    if np.any(levels <= 0.0) or np.any(levels >= 1.0):
        raise InvalidParameterError("levels must lie strictly inside (0, 1)")
    if np.any(np.diff(levels) < 0):
        raise InvalidParameterError("levels must be sorted ascending")

    empirical = np.empty_like(levels)
    for i, level in enumerate(levels):
        ivs = prediction_intervals(fit, test.predictions, alpha=1.0 - float(level))
        empirical[i] = empirical_coverage(ivs, test.responses)
    return ReliabilityCurve(levels=levels, empirical=empirical)
