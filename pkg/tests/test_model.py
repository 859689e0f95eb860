import numpy as np
import pytest
from hypothesis import given, strategies as st

from hvcg.model import (
    AuctionConfig,
    MechanismOutcome,
    Partition,
    ValuationProfile,
    group_welfare,
    kth_largest,
    ranked_ids,
)


def test_kth_largest_clearing_price_example():
    assert kth_largest([1, 70, 101, 102, 103], 4) == 70


def test_kth_largest_single_element():
    assert kth_largest([5], 1) == 5


def test_kth_largest_beyond_length_is_zero():
    """Missing bids behave as zero bids."""
    assert kth_largest([5, 4], 3) == 0.0


def test_kth_largest_rejects_k_zero():
    with pytest.raises(ValueError):
        kth_largest([1.0], 0)


@given(
    values=st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False), min_size=1, max_size=30),
    k=st.integers(min_value=1, max_value=40),
)
def test_kth_largest_matches_full_sort(values, k):
    ordered = sorted(values, reverse=True)
    expected = ordered[k - 1] if k <= len(values) else 0.0
    assert kth_largest(values, k) == expected


def test_group_welfare_single_item_goes_to_top_value():
    assert group_welfare(1, [5, 4, 3]) == 5


def test_group_welfare_zero_items():
    assert group_welfare(0, [7, 1]) == 0.0


def test_group_welfare_two_items():
    assert group_welfare(2, [103, 101]) == 204


def test_group_welfare_rejects_more_items_than_members():
    with pytest.raises(ValueError):
        group_welfare(3, [1.0, 2.0])


def test_ranked_ids_breaks_ties_toward_lower_id():
    assert ranked_ids([2.0, 3.0, 2.0, 3.0]) == [1, 3, 0, 2]


def test_valuation_profile_rejects_negative_values():
    with pytest.raises(ValueError):
        ValuationProfile((1.0, -0.5))


def test_valuation_profile_rejects_empty():
    with pytest.raises(ValueError):
        ValuationProfile(())


def test_valuation_profile_of_is_idempotent():
    profile = ValuationProfile.of([1, 2, 3])
    assert ValuationProfile.of(profile) is profile
    assert ValuationProfile.of(np.array([0.5, 0.25])).values == (0.5, 0.25)


def test_partition_requires_disjoint_cover():
    with pytest.raises(ValueError):
        Partition(frozenset({0, 1}), frozenset({1}))
    with pytest.raises(ValueError):
        Partition(frozenset({0}), frozenset({2}))  # gap at id 1
    with pytest.raises(ValueError):
        Partition(frozenset(), frozenset({0}))  # no non-colluders


def test_partition_from_colluder_ids():
    part = Partition.from_colluder_ids(5, [2, 4])
    assert part.noncolluders == frozenset({0, 1, 3})
    assert part.colluders == frozenset({2, 4})
    assert part.n_bidders == 5
    with pytest.raises(ValueError):
        Partition.from_colluder_ids(3, [3])


def test_auction_config_requires_positive_items():
    assert AuctionConfig(1).items == 1
    with pytest.raises(ValueError):
        AuctionConfig(0)


def _outcome(**overrides):
    fields = dict(
        allocation=(1, 1, 0),
        price=2.0,
        welfare=7.0,
        revenue=4.0,
        noncolluder_utility=1.0,
        colluder_joint_utility=2.0,
        items_to_noncolluders=1,
        items_to_colluders=1,
        items_unsold=0,
    )
    fields.update(overrides)
    return MechanismOutcome(**fields)


def test_outcome_accepts_consistent_accounting():
    out = _outcome()
    assert out.items_sold == 2


def test_outcome_rejects_revenue_mismatch():
    with pytest.raises(ValueError):
        _outcome(revenue=5.0, welfare=8.0)


def test_outcome_rejects_welfare_mismatch():
    with pytest.raises(ValueError):
        _outcome(welfare=6.0)


def test_outcome_rejects_allocation_count_mismatch():
    with pytest.raises(ValueError):
        _outcome(allocation=(1, 0, 0), revenue=2.0, welfare=5.0)


def test_outcome_rejects_negative_unsold():
    with pytest.raises(ValueError):
        _outcome(items_unsold=-1)
