"""Core domain types and order-statistic accounting shared by all mechanisms.

Conventions used throughout the package:

* Bidder ids are 0..M-1.  Sorts are stable and descending, ties broken toward
  the lower bidder id.
* Order statistics beyond the number of submitted bids evaluate to 0, i.e.
  missing bids behave as zero bids.  This keeps the uniform clearing price
  well-defined when there are fewer bidders than items.
* Items held by a coalition are credited at the coalition's top true values
  (members may pass items among themselves), independent of which member
  nominally won each item.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_TOL = 1e-9


def _as_value_tuple(values: "ValuationProfile | Sequence[float] | np.ndarray") -> tuple[float, ...]:
    if isinstance(values, ValuationProfile):
        return values.values
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ValuationProfile:
    """Per-bidder nonnegative values (or submitted bids), indexed by bidder id."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) < 1:
            raise ValueError("a valuation profile needs at least one bidder")
        for i, v in enumerate(self.values):
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"value of bidder {i} must be finite and >= 0, got {v}")

    @classmethod
    def of(cls, values: "ValuationProfile | Sequence[float] | np.ndarray") -> "ValuationProfile":
        if isinstance(values, ValuationProfile):
            return values
        return cls(_as_value_tuple(values))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]


@dataclass(frozen=True)
class Partition:
    """Disjoint split of bidder ids into non-colluders and colluders."""

    noncolluders: frozenset[int]
    colluders: frozenset[int]

    def __post_init__(self) -> None:
        overlap = self.noncolluders & self.colluders
        if overlap:
            raise ValueError(f"bidders {sorted(overlap)} appear in both groups")
        if len(self.noncolluders) < 1:
            raise ValueError("at least one non-colluding bidder is required")
        ids = self.noncolluders | self.colluders
        if ids != frozenset(range(len(ids))):
            raise ValueError("bidder ids must cover 0..M-1 without gaps")

    @classmethod
    def from_colluder_ids(cls, n_bidders: int, colluder_ids: Iterable[int]) -> "Partition":
        colluders = frozenset(int(i) for i in colluder_ids)
        if any(i < 0 or i >= n_bidders for i in colluders):
            raise ValueError("colluder ids must lie in 0..M-1")
        return cls(frozenset(range(n_bidders)) - colluders, colluders)

    @property
    def n_bidders(self) -> int:
        return len(self.noncolluders) + len(self.colluders)


@dataclass(frozen=True)
class AuctionConfig:
    """Number of identical items offered for sale."""

    items: int

    def __post_init__(self) -> None:
        if self.items < 1:
            raise ValueError(f"items must be >= 1, got {self.items}")


@dataclass(frozen=True)
class MechanismOutcome:
    """Allocation, clearing price, and the derived accounting of one auction run.

    The constructor enforces the accounting identities that every mechanism in
    this package must satisfy: revenue equals price times items sold, and
    welfare equals revenue plus the total utility of both bidder groups.
    """

    allocation: tuple[int, ...]
    price: float
    welfare: float
    revenue: float
    noncolluder_utility: float
    colluder_joint_utility: float
    items_to_noncolluders: int
    items_to_colluders: int
    items_unsold: int

    def __post_init__(self) -> None:
        if any(x not in (0, 1) for x in self.allocation):
            raise ValueError("allocation entries must be 0 or 1")
        sold = sum(self.allocation)
        if sold != self.items_to_noncolluders + self.items_to_colluders:
            raise ValueError("allocation does not match the per-group item counts")
        if self.items_unsold < 0:
            raise ValueError("items_unsold must be nonnegative")
        if self.price < 0:
            raise ValueError("clearing price must be nonnegative")
        if abs(self.revenue - self.price * sold) > _TOL * max(1.0, abs(self.revenue)):
            raise ValueError("revenue must equal price times items sold")
        total_utility = self.noncolluder_utility + self.colluder_joint_utility
        if abs(self.welfare - (self.revenue + total_utility)) > _TOL * max(1.0, abs(self.welfare)):
            raise ValueError("welfare must equal revenue plus total bidder utility")

    @property
    def items_sold(self) -> int:
        return self.items_to_noncolluders + self.items_to_colluders


def kth_largest(values: "Sequence[float] | np.ndarray | ValuationProfile", k: int) -> float:
    """The k-th largest element, with order statistics past the end equal to 0."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    vals = _as_value_tuple(values)
    if k > len(vals):
        return 0.0
    return sorted(vals, reverse=True)[k - 1]


def group_welfare(n_items: int, group_values: "Sequence[float] | np.ndarray | ValuationProfile") -> float:
    """Welfare credit for ``n_items`` items held by a group that can trade them
    internally: the sum of the group's ``n_items`` largest true values."""
    vals = _as_value_tuple(group_values)
    if n_items < 0 or n_items > len(vals):
        raise ValueError(f"cannot credit {n_items} items to a group of {len(vals)}")
    if n_items == 0:
        return 0.0
    return sum(sorted(vals, reverse=True)[:n_items])


def ranked_ids(values: "Sequence[float] | np.ndarray | ValuationProfile") -> list[int]:
    """Bidder ids sorted by descending value, ties toward the lower id."""
    vals = _as_value_tuple(values)
    return sorted(range(len(vals)), key=lambda i: (-vals[i], i))
