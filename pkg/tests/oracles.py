"""Independent oracles for the test suite.

Everything here recomputes expected values through routes the library does
not share: quadrature + root bracketing for distribution functions,
explicit normal equations for least squares, FISTA for the penalised
outlier objective, and dense grid search for the two-parameter lifted
losses. Keep these independent of the implementation paths they check.
"""

import math

import numpy as np
from scipy import integrate, optimize, special


# ---------------------------------------------------------------------------
# Student-t via quadrature of the density (no incomplete beta anywhere)

def t_pdf(x, df):
    return math.exp(
        special.gammaln(0.5 * (df + 1))
        - special.gammaln(0.5 * df)
        - 0.5 * math.log(df * math.pi)
        - 0.5 * (df + 1) * math.log1p(x * x / df)
    )


def t_cdf_quadrature(x, df):
    """CDF by integrating the density away from the symmetry point."""
    if x == 0.0:
        return 0.5
    lo, hi = (0.0, x) if x > 0 else (x, 0.0)
    area, _ = integrate.quad(t_pdf, lo, hi, args=(df,), epsabs=1e-13, epsrel=1e-13)
    return 0.5 + area if x > 0 else 0.5 - area


def t_quantile_quadrature(p, df):
    """Numeric inversion of the quadrature CDF by bracketed root finding."""
    if p == 0.5:
        return 0.0
    lo, hi = -1.0, 1.0
    while t_cdf_quadrature(lo, df) > p:
        lo *= 2.0
    while t_cdf_quadrature(hi, df) < p:
        hi *= 2.0
    return optimize.brentq(lambda x: t_cdf_quadrature(x, df) - p, lo, hi, xtol=1e-12)


# ---------------------------------------------------------------------------
# Simple-regression normal equations, solved as a raw 2x2 linear system

def ols_normal_equations(y, f):
    n = len(y)
    a = np.array([[n, f.sum()], [f.sum(), f @ f]])
    b = np.array([y.sum(), f @ y])
    beta = np.linalg.solve(a, b)
    return float(beta[0]), float(beta[1])


# ---------------------------------------------------------------------------
# FISTA for the penalised outlier objective (long-run first-order oracle)

def outlier_objective(y, f, b0, b1, gamma, lam):
    r = y - b0 - b1 * f - gamma
    return float(r @ r) + lam * float(np.abs(gamma).sum())


def prox_gradient_outliers(y, f, lam, max_iter=300_000, tol=1e-15):
    """Accelerated proximal gradient on (beta, gamma) jointly, with restart."""
    n = len(y)
    z = np.column_stack([np.ones(n), f])
    smax = np.linalg.svd(z, compute_uv=False)[0]
    lip = 2.0 * (smax**2 + 1.0)

    beta = np.zeros(2)
    gamma = np.zeros(n)
    vb, vg = beta.copy(), gamma.copy()
    t_mom = 1.0
    obj = outlier_objective(y, f, beta[0], beta[1], gamma, lam)
    for _ in range(max_iter):
        r = y - z @ vb - vg
        gb = -2.0 * (z.T @ r)
        gg = -2.0 * r
        beta_new = vb - gb / lip
        step = vg - gg / lip
        gamma_new = np.sign(step) * np.maximum(np.abs(step) - lam / lip, 0.0)
        obj_new = outlier_objective(y, f, beta_new[0], beta_new[1], gamma_new, lam)
        if obj_new > obj:  # restart momentum
            vb, vg, t_mom = beta.copy(), gamma.copy(), 1.0
            continue
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        mom = (t_mom - 1.0) / t_new
        vb = beta_new + mom * (beta_new - beta)
        vg = gamma_new + mom * (gamma_new - gamma)
        done = abs(obj - obj_new) <= tol * max(1.0, obj)
        beta, gamma, obj, t_mom = beta_new, gamma_new, obj_new, t_new
        if done:
            break
    return beta[0], beta[1], gamma, obj


# ---------------------------------------------------------------------------
# Lifted-loss evaluation from scratch plus dense grid minimisation

def loss_identity(y, x, b0, b1):
    r = y - b0 - b1 * x
    return float(r @ r)


def loss_logit(y, x, b0, b1, cap=30.0):
    psi = np.clip(b0 + b1 * x, -cap, cap)
    return float(np.sum(np.logaddexp(0.0, psi) - y * psi))


def loss_poisson(y, x, b0, b1, cap=30.0):
    psi = np.clip(b0 + b1 * x, -cap, cap)
    return float(np.sum(np.exp(psi) - y * psi + special.gammaln(y + 1.0)))


def grid_min_loss(loss_fn, y, x, b0_range=(-10, 10), b1_range=(-10, 10), coarse=81, refinements=6):
    """Coarse-to-fine 2-D grid search over (b0, b1)."""
    lo0, hi0 = b0_range
    lo1, hi1 = b1_range
    best = (math.inf, 0.0, 0.0)
    for _ in range(refinements):
        g0 = np.linspace(lo0, hi0, coarse)
        g1 = np.linspace(lo1, hi1, coarse)
        for b0 in g0:
            for b1 in g1:
                val = loss_fn(y, x, b0, b1)
                if val < best[0]:
                    best = (val, b0, b1)
        span0 = (hi0 - lo0) / (coarse - 1) * 2.5
        span1 = (hi1 - lo1) / (coarse - 1) * 2.5
        lo0, hi0 = best[1] - span0, best[1] + span0
        lo1, hi1 = best[2] - span1, best[2] + span1
    return best
