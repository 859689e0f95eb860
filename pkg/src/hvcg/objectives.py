"""Item-split objectives for the hybrid auction.

The split k is scored by one of three criteria, each an expectation over the
(k+1)-th largest of N standard uniforms, which is Beta(N-k, k+1) distributed:

* exact expected welfare -- needs the full valuation distribution;
* a welfare minorant and a revenue minorant -- need only the slope bounds
  L, U of the quantile function.

All expectations are evaluated with the same sum-based rule: average the
integrand at the Beta quantiles of the equal-probability midpoints
(j - 0.5)/bins.  Beta and binomial factors are computed in log space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import betaincinv, gammaln
from scipy.stats import binom

from .distributions import DistributionSpec, conditional_tail_mean
from .mechanisms import feasible_splits

OBJECTIVE_KINDS = ("exact_welfare", "welfare_minorant", "revenue_minorant")

DEFAULT_QUADRATURE_BINS = 1000


@dataclass(frozen=True)
class MarketShape:
    """Counts that define a market instance: N non-colluders, C colluders, r items."""

    n_noncolluders: int
    n_colluders: int
    items: int

    def __post_init__(self) -> None:
        if self.n_noncolluders < 1:
            raise ValueError("need at least one non-colluder")
        if self.n_colluders < 0:
            raise ValueError("number of colluders must be >= 0")
        if self.items < 1:
            raise ValueError("need at least one item")

    @property
    def feasible_k(self) -> range:
        return feasible_splits(self.items, self.n_noncolluders)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which split criterion to optimize and at what quadrature resolution.

    The distribution supplies Q for the exact criterion; the minorants read
    only its slope bounds (L, U).
    """

    kind: str
    distribution: DistributionSpec
    quadrature_bins: int = DEFAULT_QUADRATURE_BINS

    def __post_init__(self) -> None:
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"kind must be one of {OBJECTIVE_KINDS}, got {self.kind!r}")
        if self.quadrature_bins < 16:
            raise ValueError(f"quadrature_bins must be >= 16, got {self.quadrature_bins}")


def beta_quantile_grid(alpha: float, beta: float, bins: int) -> np.ndarray:
    """Beta(alpha, beta) quantiles at the equal-probability midpoints."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    p = (np.arange(bins) + 0.5) / bins
    return betaincinv(alpha, beta, p)


def _check_split(k: int, shape: MarketShape) -> None:
    if k not in shape.feasible_k:
        hi = shape.feasible_k.stop - 1
        raise ValueError(f"k must lie in 0..min(r, N-1) = 0..{hi}, got {k}")


def _rationed_qualifier_mean(k: int, p: np.ndarray, shape: MarketShape) -> np.ndarray:
    """E[min(B, r-k)] for B ~ Binomial(C, p), via the full-range pmf sum."""
    c = shape.n_colluders
    if c == 0:
        return np.zeros_like(p)
    q = np.arange(c + 1)
    pmf = binom.pmf(q[:, None], c, np.asarray(p)[None, :])
    return (np.minimum(shape.items - k, q)[:, None] * pmf).sum(axis=0)


def expected_items_sold(k: int, u, shape: MarketShape, lower: float, upper: float):
    """Expected items sold given the posted-price pivot u, under the slope
    bounds: k phase-1 items plus the rationed count of coalition qualifiers,
    each qualifying independently with probability max(0, 1 - U*u/L)."""
    if k < 0 or k > shape.items:
        raise ValueError(f"k must lie in 0..r = 0..{shape.items}, got {k}")
    if not 0 < lower <= upper:
        raise ValueError("slope bounds must satisfy 0 < L <= U")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    p = np.clip(1.0 - upper * u_arr / lower, 0.0, 1.0)
    sold = k + _rationed_qualifier_mean(k, p, shape)
    if np.isscalar(u) or np.asarray(u).ndim == 0:
        return float(sold[0])
    return sold


def exact_expected_welfare(
    k: int,
    shape: MarketShape,
    dist: DistributionSpec,
    bins: int = DEFAULT_QUADRATURE_BINS,
) -> float:
    """Expected welfare of the hybrid auction at split k under truthful bids.

    Conditioned on the pivot t (the (k+1)-th largest non-colluder uniform),
    every item sells at expected value E[Q(u) | u >= t] and the expected
    count sold is k plus E[min(B, r-k)] with B ~ Binomial(C, 1-t).  The outer
    expectation over t ~ Beta(N-k, k+1) is the sum-based rule.
    """
    _check_split(k, shape)
    t = beta_quantile_grid(shape.n_noncolluders - k, k + 1, bins)
    tail = np.asarray(conditional_tail_mean(dist, t))
    sold = k + _rationed_qualifier_mean(k, 1.0 - t, shape)
    return float(np.mean(tail * sold))


def welfare_minorant(
    k: int,
    shape: MarketShape,
    lower: float,
    upper: float,
    bins: int = DEFAULT_QUADRATURE_BINS,
) -> float:
    """Distribution-free lower bound on expected welfare at split k:
    E[(L/2)(1 + L*u/U) * expected_items_sold(k, u)] over u ~ Beta(N-k, k+1)."""
    _check_split(k, shape)
    u = beta_quantile_grid(shape.n_noncolluders - k, k + 1, bins)
    integrand = lower * (1.0 + lower * u / upper) / 2.0 * expected_items_sold(k, u, shape, lower, upper)
    return float(np.mean(integrand))


def revenue_minorant(
    k: int,
    shape: MarketShape,
    lower: float,
    upper: float,
    bins: int = DEFAULT_QUADRATURE_BINS,
) -> float:
    """Distribution-free lower bound on expected revenue at split k:
    E[L*u * expected_items_sold(k, u)] over u ~ Beta(N-k, k+1)."""
    _check_split(k, shape)
    u = beta_quantile_grid(shape.n_noncolluders - k, k + 1, bins)
    integrand = lower * u * expected_items_sold(k, u, shape, lower, upper)
    return float(np.mean(integrand))


def prob_all_items_sold(k: int, shape: MarketShape) -> float:
    """Probability that all r items sell at split k.

    This is the chance that at least r-k coalition members clear the posted
    price, a Beta-function sum evaluated through log-Gamma differences:

        sum_{q=r-k}^{C} comb(C, q) * B(C+N-k-q, q+k+1) / B(N-k, k+1).
    """
    _check_split(k, shape)
    n, c, r = shape.n_noncolluders, shape.n_colluders, shape.items
    need = r - k
    if need <= 0:
        return 1.0
    if need > c:
        return 0.0

    def log_beta(a, b):
        return gammaln(a) + gammaln(b) - gammaln(a + b)

    q = np.arange(need, c + 1)
    log_comb = gammaln(c + 1) - gammaln(q + 1) - gammaln(c - q + 1)
    log_terms = log_comb + log_beta(c + n - k - q, q + k + 1) - log_beta(n - k, k + 1)
    return float(min(1.0, np.exp(log_terms).sum()))


def objective_value(objective: ObjectiveSpec, shape: MarketShape, k: int) -> float:
    """Evaluate the configured criterion M(k)."""
    dist = objective.distribution
    if objective.kind == "exact_welfare":
        return exact_expected_welfare(k, shape, dist, objective.quadrature_bins)
    if objective.kind == "welfare_minorant":
        return welfare_minorant(k, shape, dist.lower_slope, dist.upper_slope, objective.quadrature_bins)
    return revenue_minorant(k, shape, dist.lower_slope, dist.upper_slope, objective.quadrature_bins)


def choose_k(objective: ObjectiveSpec, shape: MarketShape) -> int:
    """Maximize M(k) over the feasible splits, breaking ties toward the
    largest k (the split that behaves most like the plain auction on the
    non-colluders)."""
    best_k: Optional[int] = None
    best_val = -np.inf
    for k in shape.feasible_k:
        val = objective_value(objective, shape, k)
        if val >= best_val:
            best_k, best_val = k, val
    assert best_k is not None
    return best_k
