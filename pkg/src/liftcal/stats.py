"""Distribution numerics and seeded randomness used by every other module.

Student-t tail probabilities go through the regularized incomplete beta
function; quantiles invert the CDF with a bracketed bisection-then-Newton
scheme. The l-infinity radius of the standard bivariate Student-t has no
closed form and is estimated by seeded Monte Carlo, with the quantile's
Monte Carlo standard error reported alongside the value.

Random streams are counter-based (Philox) and keyed by (seed, stream), so
independent consumers never share a stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import InvalidParameterError

__all__ = [
    "Seed",
    "as_seed",
    "NoiseFamily",
    "BivariateTQuantile",
    "t_cdf",
    "t_quantile",
    "normal_quantile",
    "bivariate_t_linf_quantile",
    "noise_logpdf",
    "noise_sample",
]

_TWO64 = 2**64

# Fixed sub-stream ids; keep distinct so module-level consumers of one seed
# never overlap.
_STREAM_BIVT = 101
_STREAM_NOISE = 202


@dataclass(frozen=True)
class Seed:
    """64-bit seed for a counter-based random stream.

    Identical seeds yield bit-identical streams across runs on the same
    build. Streams are splittable: ``generator(stream=k)`` keys an
    independent Philox stream for each k.
    """

    value: int

    def __post_init__(self):
        if not (0 <= int(self.value) < _TWO64):
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {self.value}")

    def generator(self, stream: int = 0) -> np.random.Generator:
        key = np.array([self.value % _TWO64, stream % _TWO64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def as_seed(seed) -> Seed:
    """Coerce an int or Seed to a Seed."""
    if isinstance(seed, Seed):
        return seed
    return Seed(int(seed))


@dataclass(frozen=True)
class NoiseFamily:
    """Location-scale noise family for the lifted model's error term.

    ``kind`` is "gaussian" or "gumbel". The Gumbel convention is the
    standard one with CDF exp(-exp(-(x - location)/scale)).
    """

    kind: str
    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "gumbel"):
            raise InvalidParameterError(f"unknown noise family kind: {self.kind!r}")
        if not (self.scale > 0):
            raise InvalidParameterError(f"noise scale must be > 0, got {self.scale}")


def _check_df(df: int) -> int:
    df = int(df)
    if df < 1:
        raise InvalidParameterError(f"degrees of freedom must be >= 1, got {df}")
    return df


def _check_prob_open(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 < p < 1.0) or not math.isfinite(p):
        raise InvalidParameterError(f"{name} must lie strictly inside (0, 1), got {p}")
    return p


def t_cdf(x: float, df: int) -> float:
    """CDF of Student's t with ``df`` degrees of freedom.

    Uses F(x) = 1 - I_{v/(v+x^2)}(v/2, 1/2)/2 for x >= 0 (regularized
    incomplete beta), reflected for x < 0.
    """
    df = _check_df(df)
    x = float(x)
    if math.isnan(x):
        return math.nan
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    tail = 0.5 * special.betainc(0.5 * df, 0.5, df / (df + x * x))
    return 1.0 - tail if x > 0 else tail


def _t_logpdf(x: float, df: int) -> float:
    return (
        special.gammaln(0.5 * (df + 1))
        - special.gammaln(0.5 * df)
        - 0.5 * math.log(df * math.pi)
        - 0.5 * (df + 1) * math.log1p(x * x / df)
    )


def t_quantile(p: float, df: int) -> float:
    """Inverse CDF of Student's t; strictly increasing in p.

    Bracket by doubling, then safeguarded Newton on t_cdf - p (falls back
    to bisection whenever a Newton step leaves the bracket).
    """
    p = _check_prob_open(p)
    df = _check_df(df)
    if p == 0.5:
        return 0.0
    if p < 0.5:
        # exact odd symmetry
        return -t_quantile(1.0 - p, df)

    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        lo = hi
        hi *= 2.0
        if hi > 1e300:  # pragma: no cover - p < 1 guarantees termination
            break

    x = 0.5 * (lo + hi)
    for _ in range(200):
        err = t_cdf(x, df) - p
        if err > 0:
            hi = x
        else:
            lo = x
        if abs(err) < 1e-16 or (hi - lo) <= 1e-15 * max(1.0, abs(x)):
            break
        step = err / math.exp(_t_logpdf(x, df))
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        x = x_new
    return x


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    p = _check_prob_open(p)
    return float(special.ndtri(p))


class BivariateTQuantile(NamedTuple):
    """Monte Carlo estimate of an l-infinity quantile with its standard error."""

    value: float
    std_error: float
    draws: int


@lru_cache(maxsize=64)
def _bivt_linf_mc(alpha: float, df: int, seed_value: int, draws: int) -> BivariateTQuantile:
    gen = Seed(seed_value).generator(stream=_STREAM_BIVT)
    z = gen.standard_normal((draws, 2))
    v = gen.chisquare(df, draws)
    m = np.abs(z).max(axis=1) / np.sqrt(v / df)
    m.sort()

    p = 1.0 - alpha

    def order_stat(q: float) -> float:
        idx = min(draws - 1, max(0, math.ceil(q * draws) - 1))
        return float(m[idx])

    value = order_stat(p)
    # Woodruff interval: propagate the binomial CDF error through the
    # empirical quantile to get a value-scale standard error.
    z975 = 1.959963984540054
    half = z975 * math.sqrt(p * (1.0 - p) / draws)
    se = (order_stat(min(p + half, 1.0)) - order_stat(max(p - half, 0.0))) / (2.0 * z975)
    return BivariateTQuantile(value=value, std_error=se, draws=draws)


def bivariate_t_linf_quantile(alpha: float, df: int, seed, draws: int = 2_000_000) -> BivariateTQuantile:
    """l-infinity radius T with Pr(max(|T1|, |T2|) <= T) = 1 - alpha.

    (T1, T2) is the standard bivariate Student-t with ``df`` degrees of
    freedom (zero mean, identity scale, shared chi-squared denominator).
    Deterministic given ``seed``; results are memoized per
    (alpha, df, seed, draws).
    """
    alpha = _check_prob_open(alpha, "alpha")
    df = _check_df(df)
    if draws < 1000:
        raise InvalidParameterError(f"draws must be >= 1000, got {draws}")
    return _bivt_linf_mc(float(alpha), df, as_seed(seed).value, int(draws))


_LOG_2PI = math.log(2.0 * math.pi)


def noise_logpdf(u, family: NoiseFamily):
    """Log density of the noise family at u (scalar or array)."""
    u = np.asarray(u, dtype=float)
    z = (u - family.location) / family.scale
    if family.kind == "gaussian":
        out = -0.5 * _LOG_2PI - math.log(family.scale) - 0.5 * z * z
    else:
        out = -math.log(family.scale) - z - np.exp(-z)
    if out.ndim == 0:
        return float(out)
    return out


def noise_sample(family: NoiseFamily, n: int, seed) -> np.ndarray:
    """Draw n i.i.d. values from the family; deterministic given seed."""
    n = int(n)
    if n < 0:
        raise InvalidParameterError(f"sample size must be >= 0, got {n}")
    gen = as_seed(seed).generator(stream=_STREAM_NOISE)
    if family.kind == "gaussian":
        return family.location + family.scale * gen.standard_normal(n)
    return gen.gumbel(family.location, family.scale, n)
