"""The three auction procedures.

* :func:`vcg` -- uniform-price auction selling r items to the top r bids at
  the (r+1)-th highest bid.
* :func:`vcg_with_collusion` -- the same auction when a known coalition plays
  its joint best response (shading some bids to zero) while everyone else
  bids truthfully.
* :func:`hvcg` -- a hybrid: the uniform-price auction restricted to
  non-colluders for k items, then a posted price (the (k+1)-th non-colluder
  bid) offered to the coalition for the remaining r-k items.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    MechanismOutcome,
    Partition,
    ValuationProfile,
    group_welfare,
    kth_largest,
    ranked_ids,
)


@dataclass(frozen=True)
class BestResponse:
    """Joint utility-maximizing play of a coalition facing truthful rivals.

    Exactly ``items_taken`` coalition members -- the top ones by true value --
    bid their true value; every other member bids 0.
    """

    items_taken: int
    bids: dict[int, float]
    joint_utility: float


def feasible_splits(r: int, n_noncolluders: int) -> range:
    """Item counts k for the non-colluder phase such that the posted price
    (the (k+1)-th non-colluder bid) is always an actually submitted bid."""
    if r < 1 or n_noncolluders < 1:
        raise ValueError("need r >= 1 and at least one non-colluder")
    return range(0, min(r, n_noncolluders - 1) + 1)


def _assemble_outcome(
    n_bidders: int,
    winners_noncolluding: Sequence[int],
    winners_colluding: Sequence[int],
    price: float,
    credit_values: Sequence[float],
    colluder_ids: frozenset[int],
    r: int,
) -> MechanismOutcome:
    """Build an outcome from winner sets, crediting coalition items at the
    coalition's top true values (internal transfers)."""
    allocation = [0] * n_bidders
    for i in winners_noncolluding:
        allocation[i] = 1
    for i in winners_colluding:
        allocation[i] = 1
    m_coll = len(winners_colluding)
    coalition_values = [credit_values[i] for i in sorted(colluder_ids)]
    welfare_nc = sum(credit_values[i] for i in winners_noncolluding)
    welfare_coll = group_welfare(m_coll, coalition_values)
    sold = len(winners_noncolluding) + m_coll
    revenue = price * sold
    return MechanismOutcome(
        allocation=tuple(allocation),
        price=price,
        welfare=welfare_nc + welfare_coll,
        revenue=revenue,
        noncolluder_utility=welfare_nc - price * len(winners_noncolluding),
        colluder_joint_utility=welfare_coll - price * m_coll,
        items_to_noncolluders=len(winners_noncolluding),
        items_to_colluders=m_coll,
        items_unsold=r - sold,
    )


def vcg(
    bids: "ValuationProfile | Sequence[float] | np.ndarray",
    r: int,
    true_values: "ValuationProfile | Sequence[float] | np.ndarray | None" = None,
    partition: Optional[Partition] = None,
) -> MechanismOutcome:
    """Sell r identical items to the r highest bids at the (r+1)-th highest bid.

    Ties go to the lower bidder id.  Welfare and utilities are computed
    against ``true_values`` when supplied (the bids may be strategic),
    otherwise against the bids themselves.  When a ``partition`` is given,
    items won by the coalition are credited at its top true values and the
    coalition's joint utility is reported; without one, all bidders count as
    non-colluding.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    bid_profile = ValuationProfile.of(bids)
    m = len(bid_profile)
    values = bid_profile.values if true_values is None else ValuationProfile.of(true_values).values
    if len(values) != m:
        raise ValueError("true_values must have one entry per bidder")
    colluder_ids = partition.colluders if partition is not None else frozenset()
    if partition is not None and partition.n_bidders != m:
        raise ValueError("partition does not match the number of bidders")

    winners = ranked_ids(bid_profile)[: min(r, m)]
    price = kth_largest(bid_profile, r + 1)
    return _assemble_outcome(
        n_bidders=m,
        winners_noncolluding=[i for i in winners if i not in colluder_ids],
        winners_colluding=[i for i in winners if i in colluder_ids],
        price=price,
        credit_values=values,
        colluder_ids=colluder_ids,
        r=r,
    )


def colluder_utility_given_count(
    colluder_values: "Sequence[float] | np.ndarray",
    noncolluder_bids: "Sequence[float] | np.ndarray",
    r: int,
    r_c: int,
) -> float:
    """Best joint utility of a coalition that takes exactly ``r_c`` items.

    Taking r_c items leaves r - r_c for the rivals, so every coalition item
    clears at the (r - r_c + 1)-th rival bid (0 if there are fewer rivals).
    The coalition keeps its top r_c values and pays that price per item.
    """
    n_coll = len(colluder_values)
    if r_c < 0 or r_c > min(n_coll, r):
        raise ValueError(f"r_c must lie in 0..min(C, r) = 0..{min(n_coll, r)}, got {r_c}")
    if r_c == 0:
        return 0.0
    top = sorted((float(v) for v in colluder_values), reverse=True)[:r_c]
    price = kth_largest(noncolluder_bids, r - r_c + 1)
    return sum(top) - r_c * price


def colluder_best_response(
    true_values: "ValuationProfile | Sequence[float] | np.ndarray",
    partition: Partition,
    r: int,
) -> BestResponse:
    """Maximize the coalition's joint utility over how many items to take.

    Ties between item counts go to the smallest count, which keeps every kept
    bid strictly above the resulting clearing price.
    """
    values = ValuationProfile.of(true_values).values
    if partition.n_bidders != len(values):
        raise ValueError("partition does not match the number of bidders")
    colluder_ids = sorted(partition.colluders, key=lambda i: (-values[i], i))
    colluder_vals = [values[i] for i in colluder_ids]
    noncolluder_bids = [values[i] for i in partition.noncolluders]

    best_count, best_utility = 0, 0.0
    for r_c in range(1, min(len(colluder_ids), r) + 1):
        utility = colluder_utility_given_count(colluder_vals, noncolluder_bids, r, r_c)
        if utility > best_utility:
            best_count, best_utility = r_c, utility

    bids = {i: 0.0 for i in partition.colluders}
    for i in colluder_ids[:best_count]:
        bids[i] = values[i]
    return BestResponse(items_taken=best_count, bids=bids, joint_utility=best_utility)


def vcg_with_collusion(
    true_values: "ValuationProfile | Sequence[float] | np.ndarray",
    partition: Partition,
    r: int,
) -> MechanismOutcome:
    """The uniform-price auction at the coalition's best response.

    Non-colluders bid truthfully; coalition bids come from
    :func:`colluder_best_response`.  Welfare and the coalition's utility are
    accounted against true values with coalition items credited at its top
    values.
    """
    values = ValuationProfile.of(true_values).values
    response = colluder_best_response(values, partition, r)
    merged = list(values)
    for i, b in response.bids.items():
        merged[i] = b
    return vcg(merged, r, true_values=values, partition=partition)


def hvcg(
    bids: "ValuationProfile | Sequence[float] | np.ndarray",
    partition: Partition,
    r: int,
    k: int,
    rng: np.random.Generator,
    true_values: "ValuationProfile | Sequence[float] | np.ndarray | None" = None,
) -> MechanismOutcome:
    """Two-phase hybrid auction with item split k.

    Phase 1 sells k items to the top non-colluders at the (k+1)-th
    non-colluder bid.  Phase 2 posts that same price to the coalition for the
    remaining r-k items: members bidding strictly above it qualify, and if
    more than r-k qualify a uniformly random subset wins (seeded shuffle of
    the qualifier ids in ascending order).  The price and the non-colluder
    allocation never depend on coalition bids.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    bid_profile = ValuationProfile.of(bids)
    m = len(bid_profile)
    if partition.n_bidders != m:
        raise ValueError("partition does not match the number of bidders")
    n_noncolluders = len(partition.noncolluders)
    if k not in feasible_splits(r, n_noncolluders):
        raise ValueError(
            f"k must lie in 0..min(r, N-1) = 0..{min(r, n_noncolluders - 1)}, got {k}"
        )
    values = bid_profile.values if true_values is None else ValuationProfile.of(true_values).values
    if len(values) != m:
        raise ValueError("true_values must have one entry per bidder")

    nc_ranked = sorted(partition.noncolluders, key=lambda i: (-bid_profile[i], i))
    phase1_winners = nc_ranked[:k]
    price = bid_profile[nc_ranked[k]]

    slots = r - k
    qualifiers = sorted(i for i in partition.colluders if bid_profile[i] > price)
    if len(qualifiers) > slots:
        shuffled = np.array(qualifiers, dtype=int)
        rng.shuffle(shuffled)
        phase2_winners = [int(i) for i in shuffled[:slots]]
    else:
        phase2_winners = qualifiers

    return _assemble_outcome(
        n_bidders=m,
        winners_noncolluding=phase1_winners,
        winners_colluding=phase2_winners,
        price=price,
        credit_values=values,
        colluder_ids=partition.colluders,
        r=r,
    )
