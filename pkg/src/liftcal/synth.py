"""Synthetic benchmark data and desk-scale baseline models.

The simulated truth is a Doppler wave plus a damped cosine evaluated on
three sparse linear combinations (interaction paths) of ten standard
normal predictors; both test functions are radial/inhomogeneous enough to
embarrass global linear fits. Utilities for outlier injection and simple
baseline predictors (constant mean, multivariate least squares, k-nearest
neighbours) round out the experiment kit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .stats import Seed, as_seed

__all__ = [
    "SynthConfig",
    "SynthDataset",
    "doppler",
    "damped_cosine",
    "path_values",
    "gen_dataset",
    "inject_outliers",
    "baseline_predict",
    "three_way_split",
]

N_PREDICTORS = 10

# Default constants balance the two benchmark roles of the truth function:
# the Doppler term oscillates too fast for any smoother (and for linear
# fits) while the damped cosine carries enough smooth radial variance for
# a local averager to capture. All of them are configurable.
DEFAULT_DOPPLER = (0.3, 2.1, 0.05)
DEFAULT_DAMCOS = (2.0, 1.0, 0.0, 0.0)
DEFAULT_ACTIVE_SETS = ((1, 2, 3, 4), (4, 5, 6, 7), (7, 8, 9, 10))


@dataclass(frozen=True)
class SynthConfig:
    n: int
    seed: Seed
    sigma_eps: float = 0.1
    doppler_params: tuple = DEFAULT_DOPPLER
    damcos_params: tuple = DEFAULT_DAMCOS
    active_index_sets: tuple = DEFAULT_ACTIVE_SETS

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError(f"n must be >= 1, got {self.n}")
        if self.sigma_eps < 0:
            raise InvalidParameterError(f"sigma_eps must be >= 0, got {self.sigma_eps}")
        if len(self.active_index_sets) != 3 or any(len(s) == 0 for s in self.active_index_sets):
            raise InvalidParameterError("need three nonempty active index sets")
        for s in self.active_index_sets:
            if any(not (1 <= j <= N_PREDICTORS) for j in s):
                raise InvalidParameterError(f"active indices must lie in 1..{N_PREDICTORS}")
        object.__setattr__(self, "seed", as_seed(self.seed))


@dataclass(frozen=True)
class SynthDataset:
    predictors: np.ndarray = field(repr=False)
    responses: np.ndarray = field(repr=False)
    truth: np.ndarray = field(repr=False)


def doppler(z, a: float, b: float, c: float):
    """a * sqrt(|z|(1 - |z|)) * sin(b*pi/(z + c)); singular at z = -c."""
    z = np.asarray(z, dtype=float)
    if np.any(z + c == 0.0):
        raise InvalidInputError(f"doppler singularity at z = {-c}")
    az = np.abs(z)
    out = a * np.sqrt(np.abs(az * (1.0 - az))) * np.sin(b * math.pi / (z + c))
    return float(out) if out.ndim == 0 else out


def damped_cosine(z1, z2, a: float, b: float, c1: float, c2: float):
    """a * exp(-b*r) * cos(a*pi*r) with r the distance of (z1, z2) from (c1, c2)."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    r = np.sqrt((z1 - c1) ** 2 + (z2 - c2) ** 2)
    out = a * np.exp(-b * r) * np.cos(a * math.pi * r)
    return float(out) if out.ndim == 0 else out


def path_values(x: np.ndarray, active_index_sets=DEFAULT_ACTIVE_SETS) -> np.ndarray:
    """Interaction paths z_i = sum_{j in I_i} x_j / 10 for each row of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = []
    for idx_set in active_index_sets:
        idx = np.asarray(sorted(idx_set), dtype=int) - 1
        cols.append(x[:, idx].sum(axis=1) / N_PREDICTORS)
    return np.column_stack(cols)


def truth_function(x: np.ndarray, config: SynthConfig) -> np.ndarray:
    """Noise-free simulated regression function at predictor rows x."""
    z = path_values(x, config.active_index_sets)
    return doppler(z[:, 0], *config.doppler_params) + damped_cosine(z[:, 1], z[:, 2], *config.damcos_params)


def gen_dataset(config: SynthConfig) -> SynthDataset:
    """Standard-normal predictors, truth values, and noisy responses."""
    gen = config.seed.generator()
    x = gen.standard_normal((config.n, N_PREDICTORS))
    truth = truth_function(x, config)
    responses = truth + config.sigma_eps * gen.standard_normal(config.n)
    return SynthDataset(predictors=x, responses=responses, truth=truth)


def inject_outliers(responses, stats: tuple[float, float], n_out: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Replace n_out random entries with mean +/- k * sd bumps, k ~ U(3, 5).

    ``stats`` carries the (mean, standard deviation) of the clean
    responses; the sign of each bump is a fair coin. Returns the modified
    copy and the sorted flagged indices.
    """
    y = np.asarray(responses, dtype=float).copy()
    n_out = int(n_out)
    if n_out < 0 or n_out > y.shape[0]:
        raise InvalidInputError(f"cannot flag {n_out} of {y.shape[0]} entries")
    ybar, s_y = float(stats[0]), float(stats[1])
    gen = as_seed(seed).generator()
    idx = np.sort(gen.choice(y.shape[0], size=n_out, replace=False))
    k = gen.uniform(3.0, 5.0, n_out)
    sign = 2.0 * gen.integers(0, 2, n_out) - 1.0
    y[idx] = ybar + sign * k * s_y
    return y, idx


def three_way_split(n: int, seed, fractions=(0.7, 0.2, 0.1)) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shuffled train/calibration/out-of-sample index split."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidParameterError("split fractions must sum to one")
    perm = as_seed(seed).generator(stream=3).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_calib = int(round(fractions[1] * n))
    return perm[:n_train], perm[n_train : n_train + n_calib], perm[n_train + n_calib :]


def baseline_predict(kind: str, train: tuple[np.ndarray, np.ndarray], test_x, k: int = 5) -> np.ndarray:
    """Desk-scale reference models: "mean", "ols", or "knn".

    "mean" predicts the training mean everywhere; "ols" is multivariate
    least squares with intercept (ridge-stabilised with a 1e-8 diagonal
    and a warning if the normal equations are singular); "knn" averages
    the k nearest training responses in Euclidean distance, ties broken
    by index order.
    """
    x_train = np.asarray(train[0], dtype=float)
    y_train = np.asarray(train[1], dtype=float)
    test_x = np.atleast_2d(np.asarray(test_x, dtype=float))
    if x_train.ndim != 2 or x_train.shape[0] != y_train.shape[0]:
        raise InvalidInputError("train predictors/responses are inconsistent")
    if test_x.shape[1] != x_train.shape[1]:
        raise InvalidInputError("test predictors have the wrong width")

    if kind == "mean":
        return np.full(test_x.shape[0], y_train.mean())
    if kind == "ols":
        a = np.column_stack([np.ones(x_train.shape[0]), x_train])
        ata = a.T @ a
        aty = a.T @ y_train
        try:
            theta = np.linalg.solve(ata, aty)
        except np.linalg.LinAlgError:
            warnings.warn("singular normal equations; ridge 1e-8 applied", RuntimeWarning, stacklevel=2)
            theta = np.linalg.solve(ata + 1e-8 * np.eye(ata.shape[0]), aty)
        return np.column_stack([np.ones(test_x.shape[0]), test_x]) @ theta
    if kind == "knn":
        k = int(k)
        if k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {k}")
        if k > x_train.shape[0]:
            raise InvalidInputError(f"k={k} exceeds {x_train.shape[0]} training points")
        d2 = (
            (test_x**2).sum(axis=1)[:, None]
            + (x_train**2).sum(axis=1)[None, :]
            - 2.0 * test_x @ x_train.T
        )
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return y_train[nearest].mean(axis=1)
    raise InvalidParameterError(f"unknown baseline kind {kind!r}")
