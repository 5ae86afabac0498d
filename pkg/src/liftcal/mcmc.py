"""Posterior sampling for prediction intervals beyond the Gaussian case.

The lifted model's residual distribution is swapped for any location-scale
family (Gaussian or Gumbel here) and the triplet (intercept, slope,
log-scale) is sampled from its posterior under flat improper priors with
component-wise random-walk Metropolis. One chain then prices intervals for
any number of new points: each posterior draw contributes one simulated
response at the new prediction, and the equal-tailed empirical quantiles
form the band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientDataError,
    InsufficientSamplesError,
    InvalidParameterError,
    TuningFailureError,
)
from .intervals import METHOD_MCMC, Interval
from .lifted import CalibrationSet, fit_lifted_linear
from .stats import NoiseFamily, Seed, as_seed, noise_logpdf

__all__ = ["PosteriorChain", "McmcConfig", "log_posterior", "sample_posterior", "predictive_interval_mcmc", "chain_diagnostics"]

_ADAPT_BATCH = 50
_STREAM_PREDICTIVE = 7001


@dataclass(frozen=True)
class McmcConfig:
    """Sampler settings; defaults suit a three-parameter posterior."""

    m_samples: int = 20_000
    burn_in: int = 5_000
    target_acceptance: float = 0.234
    seed: Seed = Seed(0)
    n_chains: int = 4

    def __post_init__(self):
        if self.m_samples < 100:
            raise InvalidParameterError(f"m_samples must be >= 100, got {self.m_samples}")
        if self.burn_in < 0:
            raise InvalidParameterError(f"burn_in must be >= 0, got {self.burn_in}")
        if not (0.0 < self.target_acceptance < 1.0):
            raise InvalidParameterError("target_acceptance must lie in (0, 1)")
        if self.n_chains < 1:
            raise InvalidParameterError(f"n_chains must be >= 1, got {self.n_chains}")
        object.__setattr__(self, "seed", as_seed(self.seed))


@dataclass(frozen=True)
class PosteriorChain:
    """Post-burn-in samples of (intercept, slope, log-scale)."""

    samples: np.ndarray = field(repr=False)
    acceptance_rate: float
    burn_in: int
    family: str
    seed: Seed

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 3 or s.shape[0] < 1:
            raise InvalidParameterError(f"samples must be an M x 3 matrix, got shape {s.shape}")
        if not np.isfinite(s).all():
            raise InvalidParameterError("chain contains non-finite samples")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.shape[0]


def log_posterior(params, data: CalibrationSet, family_kind: str) -> float:
    """Log posterior of (intercept, slope, log-scale) under flat priors.

    Flat priors on the intercept, slope and scale contribute nothing
    beyond the log-scale Jacobian (the scale is parameterised on the log
    axis).
    """
    b0, b1, log_scale = (float(v) for v in params)
    family = NoiseFamily(kind=family_kind, location=0.0, scale=math.exp(log_scale))
    resid = data.responses - b0 - b1 * data.predictions
    return float(np.sum(noise_logpdf(resid, family))) + log_scale


def _run_chain(data, family_kind, config, chain_id, start, base_steps, n_keep):
    gen = config.seed.generator(stream=chain_id + 1)
    x = start.copy()
    lp = log_posterior(x, data, family_kind)
    steps = base_steps.copy()
    kept = np.empty((n_keep, 3))
    accepted_post = 0
    proposals_post = 0
    batch_accept = np.zeros(3)
    batch_count = 0
    adapt_round = 0

    total = config.burn_in + n_keep
    for it in range(total):
        in_burn = it < config.burn_in
        for j in range(3):
            prop = x.copy()
            prop[j] += steps[j] * gen.standard_normal()
            lp_prop = log_posterior(prop, data, family_kind)
            if math.log(gen.uniform()) < lp_prop - lp:
                x, lp = prop, lp_prop
                if in_burn:
                    batch_accept[j] += 1
                else:
                    accepted_post += 1
            if not in_burn:
                proposals_post += 1
        if in_burn:
            batch_count += 1
            if batch_count == _ADAPT_BATCH:
                adapt_round += 1
                rate = batch_accept / _ADAPT_BATCH
                gain = 1.0 / math.sqrt(adapt_round)
                steps *= np.exp(gain * (rate - config.target_acceptance))
                np.clip(steps, 1e-10, 1e6, out=steps)
                batch_accept[:] = 0.0
                batch_count = 0
        else:
            kept[it - config.burn_in] = x
    return kept, accepted_post, proposals_post


def sample_posterior(data: CalibrationSet, family_kind: str, config: McmcConfig) -> PosteriorChain:
    """Random-walk Metropolis over (intercept, slope, log-scale).

    Per-coordinate step sizes adapt toward the target acceptance rate
    during burn-in and are frozen afterwards. Chains start at the
    least-squares point, run on independent sub-streams of the seed, and
    their post-burn-in samples are concatenated. Deterministic given the
    config seed.
    """
    NoiseFamily(kind=family_kind)  # validate the kind early
    if data.n_calb < 4:
        raise InsufficientDataError("posterior sampling needs n_calb >= 4")

    ols = fit_lifted_linear(data)
    scale0 = ols.sigma_u_hat if ols.sigma_u_hat > 0.0 else max(1e-8, 1e-8 * ols.s_y)
    start = np.array([ols.beta0_hat, ols.beta1_hat, math.log(scale0)])
    se = scale0 * np.sqrt(np.diag(ols.cov_scale))
    base_steps = np.array([max(2.4 * se[0], 1e-8), max(2.4 * se[1], 1e-8), 0.5])

    per_chain = -(-config.m_samples // config.n_chains)  # ceil
    parts = []
    accepted = 0
    proposals = 0
    for c in range(config.n_chains):
        kept, acc, props = _run_chain(data, family_kind, config, c, start, base_steps, per_chain)
        parts.append(kept)
        accepted += acc
        proposals += props
    samples = np.concatenate(parts)[: config.m_samples]
    rate = accepted / proposals if proposals else 0.0
    if rate < 0.01:
        raise TuningFailureError(f"acceptance rate {rate:.4f} collapsed after adaptation")
    return PosteriorChain(
        samples=samples, acceptance_rate=rate, burn_in=config.burn_in, family=family_kind, seed=config.seed
    )


def predictive_interval_mcmc(chain: PosteriorChain, f0: float, alpha: float, seed) -> Interval:
    """Equal-tailed empirical-quantile interval at a new prediction f0.

    Each posterior draw (b0, b1, s) contributes b0 + b1*f0 + u with u a
    fresh noise draw at scale exp(s); the sorted sample's floor(alpha/2*M)
    and floor((1-alpha/2)*M) order statistics bound the interval and the
    median is the centre. The chain itself is never resampled, so one
    chain serves every new point.
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    m = len(chain)
    k_lo = math.floor(0.5 * alpha * m)
    k_up = math.floor((1.0 - 0.5 * alpha) * m)
    if k_lo < 1:
        raise InsufficientSamplesError(f"need M * alpha/2 >= 1; M={m}, alpha={alpha}")

    gen = as_seed(seed).generator(stream=_STREAM_PREDICTIVE)
    b0 = chain.samples[:, 0]
    b1 = chain.samples[:, 1]
    scale = np.exp(chain.samples[:, 2])
    if chain.family == "gaussian":
        u = scale * gen.standard_normal(m)
    else:
        u = gen.gumbel(0.0, scale, m)
    v = np.sort(b0 + b1 * float(f0) + u)
    return Interval(
        center=float(np.median(v)),
        lower=float(v[k_lo - 1]),
        upper=float(v[k_up - 1]),
        level=1.0 - alpha,
        method=METHOD_MCMC,
    )


def _ess_single(x: np.ndarray) -> float:
    n = x.shape[0]
    xc = x - x.mean()
    var = float(xc @ xc) / n
    if var == 0.0:
        return 1.0
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(spec * np.conj(spec))[:n].real / n
    rho = acov / acov[0]
    # initial positive sequence: sum pair autocorrelations while positive
    tau = -1.0
    k = 0
    while 2 * k + 1 < n:
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        k += 1
    tau = max(tau, 1.0 / n)
    return float(min(max(n / tau, 1.0), n))


def chain_diagnostics(chain: PosteriorChain) -> tuple[float, np.ndarray]:
    """Acceptance rate and per-coordinate effective sample size."""
    if len(chain) < 10:
        raise InsufficientSamplesError("diagnostics need a chain of length >= 10")
    ess = np.array([_ess_single(chain.samples[:, j]) for j in range(3)])
    return chain.acceptance_rate, ess
