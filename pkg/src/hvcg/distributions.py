"""Valuation distributions on [0, 1] described by their quantile function.

Each family carries its quantile Q, the CDF F obtained by inverting Q
analytically, and slope constants 0 < L <= U with L*x <= Q(x) <= U*x on
[0, 1].  Sampling is by inverse transform, and the (k+1)-th largest of n
standard uniforms is available directly since it is Beta(n-k, k+1)
distributed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ValuationProfile

DEFAULT_TAIL_BINS = 2048

# Above this group size, order statistics of uniforms are drawn from the Beta
# law directly; below it, the defining construction (sort n uniforms) is used
# and doubles as a correctness oracle for the direct sampler.
_SORT_SAMPLER_MAX_N = 64


@dataclass(frozen=True)
class DistributionSpec:
    """A valuation distribution: quantile, CDF, and quantile slope bounds."""

    name: str
    quantile: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    lower_slope: float
    upper_slope: float

    def __post_init__(self) -> None:
        if not 0 < self.lower_slope <= self.upper_slope:
            raise ValueError("slope bounds must satisfy 0 < L <= U")


def _uniform_q(p):
    return np.asarray(p, dtype=float)


def _uniform_f(v):
    return np.asarray(v, dtype=float)


def _trapezoidal_q(p):
    return 2.0 - np.sqrt(4.0 - 3.0 * np.asarray(p, dtype=float))


def _trapezoidal_f(v):
    v = np.asarray(v, dtype=float)
    return (4.0 * v - v * v) / 3.0


def _quadratic_q(p):
    return 1.0 - np.cbrt(1.0 - np.asarray(p, dtype=float))


def _quadratic_f(v):
    return 1.0 - (1.0 - np.asarray(v, dtype=float)) ** 3


def _sinusoid_q(p):
    return np.sin(np.pi * np.asarray(p, dtype=float) / 2.0)


def _sinusoid_f(v):
    return (2.0 / np.pi) * np.arcsin(np.asarray(v, dtype=float))


_BUILTINS = {
    "uniform": DistributionSpec("uniform", _uniform_q, _uniform_f, 1.0, 1.0),
    "trapezoidal": DistributionSpec("trapezoidal", _trapezoidal_q, _trapezoidal_f, 0.75, 1.0),
    "quadratic": DistributionSpec("quadratic", _quadratic_q, _quadratic_f, 1.0 / 3.0, 1.0),
    "sinusoid": DistributionSpec("sinusoid", _sinusoid_q, _sinusoid_f, 1.0, math.pi / 2.0),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str) -> DistributionSpec:
    """Look up a built-in distribution family by (case-insensitive) name."""
    key = name.strip().lower()
    if key not in _BUILTINS:
        raise ValueError(f"unknown distribution {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    return _BUILTINS[key]


def sample(dist: DistributionSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. valuations by inverse transform."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if count == 0:
        return np.empty(0)
    return np.asarray(dist.quantile(rng.random(count)), dtype=float)


def sample_profile(dist: DistributionSpec, rng: np.random.Generator, count: int) -> ValuationProfile:
    """Like :func:`sample` but wrapped as a validated profile."""
    return ValuationProfile(tuple(sample(dist, rng, count)))


def sample_order_statistic_u(n: int, k: int, rng: np.random.Generator) -> float:
    """One draw of the (k+1)-th largest of n standard uniforms, Beta(n-k, k+1)."""
    if k < 0 or n - k < 1:
        raise ValueError(f"need 1 <= k+1 <= n, got n={n}, k={k}")
    if n <= _SORT_SAMPLER_MAX_N:
        u = rng.random(n)
        u.sort()
        return float(u[n - k - 1])
    return float(rng.beta(n - k, k + 1))


def conditional_tail_mean(
    dist: DistributionSpec,
    t: "float | np.ndarray",
    bins: int = DEFAULT_TAIL_BINS,
) -> "float | np.ndarray":
    """Mean of Q(u) for u uniform on [t, 1], by the composite midpoint rule.

    Accepts a scalar or an array of thresholds; each must satisfy 0 <= t < 1.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr >= 1):
        raise ValueError("tail threshold must lie in [0, 1)")
    mid = (np.arange(bins) + 0.5) / bins
    nodes = t_arr[..., None] + (1.0 - t_arr[..., None]) * mid
    means = np.asarray(dist.quantile(nodes)).mean(axis=-1)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(means)
    return means


@dataclass(frozen=True)
class BoundsReport:
    """Grid check of L*x <= Q(x) <= U*x and monotonicity of Q."""

    name: str
    grid_points: int
    passed: bool
    worst_lower_margin: float  # min over grid of Q(x) - L*x
    worst_upper_margin: float  # min over grid of U*x - Q(x)
    monotone: bool


def validate_bounds(dist: DistributionSpec, grid_points: int, tol: float = 1e-12) -> BoundsReport:
    """Check the slope sandwich and monotonicity on an equispaced grid.

    Violations are reported, not raised.
    """
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")
    x = np.linspace(0.0, 1.0, grid_points)
    q = np.asarray(dist.quantile(x), dtype=float)
    lower = q - dist.lower_slope * x
    upper = dist.upper_slope * x - q
    monotone = bool(np.all(np.diff(q) >= -tol))
    worst_lower = float(lower.min())
    worst_upper = float(upper.min())
    passed = worst_lower >= -tol and worst_upper >= -tol and monotone
    return BoundsReport(dist.name, grid_points, passed, worst_lower, worst_upper, monotone)
