"""Automatic outlier detection for calibration/test pairs.

Solves

    min_{b0, b1, gamma}  sum_i (y_i - b0 - b1*f_i - gamma_i)^2 + lambda * sum_i |gamma_i|

by block coordinate descent: a least-squares sweep on the gamma-corrected
responses alternating with a per-point soft-threshold of the residuals.
Points with nonzero gamma are the flagged outliers. The penalty ceiling
lambda_max = sigma_mad * sqrt(2 ln n) uses the universal threshold with the
noise scale estimated from the finest-scale Haar details of the residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientDataError,
    InvalidInputError,
    InvalidParameterError,
    ModelUnsuitableError,
    NonConvergenceError,
    ShapeMismatchError,
)
from .lifted import CalibrationSet, LiftedFit, fit_lifted_linear, residuals

__all__ = [
    "OutlierSolution",
    "WaveletDetail",
    "soft_threshold",
    "haar_dwt",
    "haar_idwt",
    "mad_sigma",
    "lambda_max",
    "detect_outliers",
    "select_lambda",
]

MAD_GAUSS = 0.6745  # median absolute deviation of a standard normal
CONVERGENCE_TOL = 1e-6  # l1 change of (beta, gamma) between sweeps
MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class OutlierSolution:
    """Solution of the penalised problem at one penalty level."""

    beta0: float
    beta1: float
    gamma: np.ndarray = field(repr=False)
    lam: float
    iterations: int
    objective: float
    outlier_indices: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class WaveletDetail:
    """Orthonormal Haar analysis of a length-2^J vector.

    ``coefficients`` runs [approximation, coarsest details, ..., finest
    details]; ``finest`` is the trailing half.
    """

    coefficients: np.ndarray
    finest: np.ndarray


def soft_threshold(u, lam: float):
    """sign(u) * max(|u| - lam, 0); scalar or elementwise."""
    if lam < 0:
        raise InvalidParameterError(f"threshold must be >= 0, got {lam}")
    u = np.asarray(u, dtype=float)
    out = np.sign(u) * np.maximum(np.abs(u) - lam, 0.0)
    return float(out) if out.ndim == 0 else out


def haar_dwt(x) -> WaveletDetail:
    """Full orthonormal Haar transform of a power-of-two-length vector."""
    a = np.asarray(x, dtype=float).copy()
    n = a.shape[0]
    if a.ndim != 1 or n < 2 or n & (n - 1) != 0:
        raise ShapeMismatchError(f"length must be a power of two >= 2, got shape {np.shape(x)}")
    details = []
    while a.shape[0] > 1:
        even, odd = a[0::2], a[1::2]
        details.append((even - odd) / math.sqrt(2.0))  # finest level first
        a = (even + odd) / math.sqrt(2.0)
    coeffs = np.concatenate([a] + details[::-1])
    return WaveletDetail(coefficients=coeffs, finest=details[0])


def haar_idwt(coefficients) -> np.ndarray:
    """Invert haar_dwt; exact round trip up to rounding."""
    c = np.asarray(coefficients, dtype=float)
    n = c.shape[0]
    if c.ndim != 1 or n < 2 or n & (n - 1) != 0:
        raise ShapeMismatchError(f"length must be a power of two >= 2, got shape {np.shape(coefficients)}")
    a = c[:1].copy()
    pos = 1
    while pos < n:
        d = c[pos : pos + a.shape[0]]
        out = np.empty(2 * a.shape[0])
        out[0::2] = (a + d) / math.sqrt(2.0)
        out[1::2] = (a - d) / math.sqrt(2.0)
        pos += a.shape[0]
        a = out
    return a


def mad_sigma(details) -> float:
    """Median absolute deviation scaled for Gaussian data."""
    d = np.asarray(details, dtype=float)
    if d.size == 0:
        raise InvalidInputError("cannot estimate scale from an empty vector")
    return float(np.median(np.abs(d - np.median(d))) / MAD_GAUSS)


def lambda_max(calib: CalibrationSet, fit: LiftedFit) -> float:
    """Universal-threshold penalty ceiling sigma_mad * sqrt(2 ln n).

    The noise scale comes from the finest-scale Haar details of the lifted
    residuals; when n is not a power of two only the most recent
    power-of-two block feeds the scale estimate (detection itself always
    uses every point).
    """
    if calib.n_calb < 4:
        raise InsufficientDataError("penalty ceiling needs n_calb >= 4")
    resid = residuals(fit, calib)
    block = 1 << (calib.n_calb.bit_length() - 1)
    sigma = mad_sigma(haar_dwt(resid[-block:]).finest)
    return sigma * math.sqrt(2.0 * math.log(calib.n_calb))


def _ols_beta(y: np.ndarray, f: np.ndarray, mu: float, ss: float) -> tuple[float, float]:
    b1 = float((f - mu) @ (y - y.mean())) / ss
    return float(y.mean() - b1 * mu), b1


def detect_outliers(data: CalibrationSet, lam: float, max_sweeps: int = MAX_SWEEPS) -> OutlierSolution:
    """Block coordinate descent for the penalised problem at penalty ``lam``.

    Stops when the combined l1 change of (beta, gamma) drops to 1e-6.
    Raises NonConvergenceError (carrying the last iterate) at the sweep
    cap; the objective is checked to be nonincreasing every sweep.
    """
    if lam < 0 or not math.isfinite(lam):
        raise InvalidParameterError(f"penalty must be a finite nonnegative real, got {lam}")
    y = data.responses
    f = data.predictions
    mu = float(f.mean())
    ss = float(((f - mu) ** 2).sum())
    if ss == 0.0:
        raise InvalidInputError("constant predictions: outlier problem is degenerate")

    gamma = np.zeros_like(y)
    beta = np.array([0.0, 0.0])
    obj_prev = math.inf
    for sweep in range(1, max_sweeps + 1):
        b0, b1 = _ols_beta(y - gamma, f, mu, ss)
        u = y - b0 - b1 * f
        gamma_new = soft_threshold(u, lam)
        r = u - gamma_new
        obj = float(r @ r) + lam * float(np.abs(gamma_new).sum())
        assert obj <= obj_prev * (1.0 + 1e-12) + 1e-12, "block descent objective increased"
        delta = abs(b0 - beta[0]) + abs(b1 - beta[1]) + float(np.abs(gamma_new - gamma).sum())
        beta = np.array([b0, b1])
        gamma = gamma_new
        obj_prev = obj
        if delta <= CONVERGENCE_TOL:
            return OutlierSolution(
                beta0=b0,
                beta1=b1,
                gamma=gamma,
                lam=float(lam),
                iterations=sweep,
                objective=obj,
                outlier_indices=np.flatnonzero(gamma != 0.0),
            )
    last = OutlierSolution(
        beta0=float(beta[0]),
        beta1=float(beta[1]),
        gamma=gamma,
        lam=float(lam),
        iterations=max_sweeps,
        objective=obj_prev,
        outlier_indices=np.flatnonzero(gamma != 0.0),
    )
    raise NonConvergenceError(f"no convergence within {max_sweeps} sweeps at penalty {lam}", solution=last)


def select_lambda(data: CalibrationSet, grid_size: int = 50, seed=None) -> tuple[float, OutlierSolution]:
    """Pick the penalty on an even grid over [0, lambda_max].

    The score for each candidate is the mean squared residual over the
    points *not* flagged (gamma = 0); normalising by the inlier count is
    what stops the unpenalised solution (which flags everything) from
    winning. Ties break toward the larger penalty. ``seed`` is accepted
    for interface stability; the search itself is deterministic.

    Raises ModelUnsuitableError when every point is flagged at every
    penalty: the data are corrupted or the model does not generalise.
    """
    grid_size = int(grid_size)
    if grid_size < 2:
        raise InvalidParameterError(f"grid must have at least 2 points, got {grid_size}")
    fit = fit_lifted_linear(data)
    lam_hi = lambda_max(data, fit)
    grid = np.linspace(0.0, lam_hi, grid_size)

    best: tuple[float, float, OutlierSolution] | None = None
    for lam in grid:
        sol = detect_outliers(data, float(lam))
        inlier = sol.gamma == 0.0
        n_in = int(inlier.sum())
        if n_in == 0:
            continue
        u = data.responses - sol.beta0 - sol.beta1 * data.predictions
        score = float((u[inlier] ** 2).sum()) / n_in
        if best is None or score <= best[0]:
            best = (score, float(lam), sol)
    if best is None:
        raise ModelUnsuitableError("every point is flagged at every penalty level")
    return best[1], best[2]
