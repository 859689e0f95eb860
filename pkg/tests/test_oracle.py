import numpy as np
import pytest

from hvcg.distributions import builtin, sample
from hvcg.mechanisms import colluder_best_response, colluder_utility_given_count, feasible_splits, hvcg, vcg, vcg_with_collusion
from hvcg.model import Partition
from hvcg.objectives import MarketShape
from hvcg.oracle import (
    DeviationGrid,
    EnumerationBudgetError,
    batch_metrics,
    brute_force_best_response,
    check_hvcg_dsic,
    draw_valuations,
    mc_estimate,
    run_verification,
)
from hvcg.rng import substream

UNIFORM = builtin("uniform")

EXAMPLE_VALUES = (1.0, 70.0, 101.0, 102.0, 103.0)
EXAMPLE_PARTITION = Partition.from_colluder_ids(5, [2, 4])


def test_deviation_grid_contents():
    grid = DeviationGrid.for_instance(EXAMPLE_VALUES, EXAMPLE_PARTITION, delta=1e-6)
    pts = set(grid.points)
    assert 0.0 in pts
    assert set(EXAMPLE_VALUES) <= pts
    for i in EXAMPLE_PARTITION.noncolluders:
        assert EXAMPLE_VALUES[i] + 1e-6 in pts
        assert EXAMPLE_VALUES[i] - 1e-6 in pts
    assert list(grid.points) == sorted(pts)


def test_deviation_grid_rejects_unsorted_or_negative():
    with pytest.raises(ValueError):
        DeviationGrid((1.0, 0.5))
    with pytest.raises(ValueError):
        DeviationGrid((-0.5, 1.0))


def test_brute_force_flagship_example():
    grid = DeviationGrid.for_instance(EXAMPLE_VALUES, EXAMPLE_PARTITION)
    result = brute_force_best_response(EXAMPLE_VALUES, EXAMPLE_PARTITION, 3, grid)
    assert result.joint_utility == pytest.approx(102, abs=1e-5)
    assert result.items_to_colluders == 1


def test_brute_force_two_point_grid_single_colluder():
    values = (0.8, 0.3, 0.6)
    part = Partition.from_colluder_ids(3, [2])
    grid = DeviationGrid((0.0, 0.6))
    result = brute_force_best_response(values, part, 2, grid)
    expected = max(
        0.0,
        colluder_utility_given_count([0.6], [0.8, 0.3], 2, 1),
    )
    assert result.joint_utility == pytest.approx(expected, abs=1e-12)


def test_brute_force_budget_guard():
    values = tuple(np.linspace(0.1, 0.9, 9))
    part = Partition.from_colluder_ids(9, range(1, 9))
    grid = DeviationGrid.for_instance(values, part)
    with pytest.raises(EnumerationBudgetError):
        brute_force_best_response(values, part, 3, grid)


def test_brute_force_agrees_with_closed_form_on_random_instances():
    rng = np.random.default_rng(202)
    delta = 1e-6
    for _ in range(60):
        m = int(rng.integers(2, 7))
        c = int(rng.integers(1, min(3, m - 1) + 1))
        r = int(rng.integers(1, 4))
        values = tuple(rng.random(m))
        part = Partition.from_colluder_ids(m, rng.choice(m, size=c, replace=False).tolist())
        grid = DeviationGrid.for_instance(values, part, delta)
        brute = brute_force_best_response(values, part, r, grid)
        closed = colluder_best_response(values, part, r)
        assert abs(brute.joint_utility - closed.joint_utility) <= delta * r + 1e-9
        truthful = vcg(values, r, partition=part)
        assert brute.items_to_colluders <= truthful.items_to_colluders


# --- deviation-proofness checks ---------------------------------------------


def test_dsic_check_passes_on_fixed_instance():
    values = (3.0, 2.0, 1.0, 5.0, 4.0)
    part = Partition.from_colluder_ids(5, [3, 4])
    grid = DeviationGrid.for_instance(values, part)
    report = check_hvcg_dsic(values, part, r=2, k=1, grid=grid)
    assert report.passed
    assert report.max_noncolluder_gain <= 1e-9
    assert report.max_colluder_gain <= 1e-9


def test_dsic_check_without_coalition_is_plain_auction_truthfulness():
    values = (0.9, 0.4, 0.7)
    part = Partition.from_colluder_ids(3, [])
    grid = DeviationGrid.for_instance(values, part)
    for k in feasible_splits(2, 3):
        assert check_hvcg_dsic(values, part, r=2, k=k, grid=grid).passed


def test_pooled_raffle_variant_is_manipulable():
    """If all items are raffled among every above-price bidder, the coalition
    profits by overbidding; the per-group split is what preserves honesty."""
    values = (1.0, 2.0, 1.0, 2.0, 3.0)
    part = Partition.from_colluder_ids(5, [2, 3, 4])
    grid = DeviationGrid.for_instance(values, part)
    proper = check_hvcg_dsic(values, part, r=2, k=1, grid=grid)
    pooled = check_hvcg_dsic(values, part, r=2, k=1, grid=grid, pooled=True)
    assert proper.passed
    assert not pooled.passed
    assert pooled.max_colluder_gain > 1e-6


def test_dsic_check_budget_guard():
    values = tuple(np.linspace(0.05, 0.95, 10))
    part = Partition.from_colluder_ids(10, range(2, 10))
    grid = DeviationGrid.for_instance(values, part)
    with pytest.raises(EnumerationBudgetError):
        check_hvcg_dsic(values, part, r=3, k=1, grid=grid)


def test_dsic_check_rejects_infeasible_split():
    values = (1.0, 2.0, 3.0)
    part = Partition.from_colluder_ids(3, [2])
    grid = DeviationGrid.for_instance(values, part)
    with pytest.raises(ValueError):
        check_hvcg_dsic(values, part, r=3, k=2, grid=grid)


# --- Monte Carlo estimation ---------------------------------------------------


def test_mc_estimate_top_of_two_uniforms():
    stats = mc_estimate("vcg_noncolluders_only", UNIFORM, MarketShape(2, 0, 1), reps=100_000, master_seed=13)
    assert abs(stats.mean_welfare - 2 / 3) <= 3 * stats.stderr_welfare


def test_mc_estimate_single_rep_has_no_stderr():
    stats = mc_estimate("vcg_all_truthful", UNIFORM, MarketShape(2, 1, 2), reps=1, master_seed=3)
    assert stats.stderr_welfare is None
    assert stats.stderr_revenue is None
    assert stats.reps == 1


def test_mc_estimate_is_deterministic():
    shape = MarketShape(4, 3, 3)
    a = mc_estimate("hvcg", UNIFORM, shape, reps=500, master_seed=21, k=2)
    b = mc_estimate("hvcg", UNIFORM, shape, reps=500, master_seed=21, k=2)
    assert a == b


def test_mc_estimate_rejects_unknown_mechanism():
    with pytest.raises(ValueError):
        mc_estimate("english_auction", UNIFORM, MarketShape(2, 0, 1), reps=10, master_seed=0)


def test_mc_estimate_hvcg_requires_split_or_objective():
    with pytest.raises(ValueError):
        mc_estimate("hvcg", UNIFORM, MarketShape(3, 1, 2), reps=10, master_seed=0)


def test_draw_valuations_rows_come_from_per_rep_substreams():
    values = draw_valuations(UNIFORM, 4, 10, master_seed=9)
    for rep in (0, 3, 9):
        expected = sample(UNIFORM, substream(9, "mc", rep), 4)
        assert np.array_equal(values[rep], expected)


@pytest.mark.parametrize("mechanism", ["vcg_all_truthful", "vcg_noncolluders_only", "vcg_with_collusion", "hvcg"])
def test_batch_metrics_match_direct_mechanism_calls(mechanism):
    """The vectorized estimator must agree with the mechanism implementations
    repetition by repetition."""
    shape = MarketShape(4, 3, 3)
    k = 2
    values = draw_valuations(UNIFORM, 7, 200, master_seed=57)
    metrics = batch_metrics(mechanism, values, shape, k=k)
    part = Partition.from_colluder_ids(7, range(4, 7))
    for rep in range(200):
        row = tuple(values[rep])
        if mechanism == "vcg_all_truthful":
            out = vcg(row, 3, partition=part)
        elif mechanism == "vcg_noncolluders_only":
            out = vcg(row[:4], 3)
        elif mechanism == "vcg_with_collusion":
            out = vcg_with_collusion(row, part, 3)
        else:
            out = hvcg(row, part, 3, k, substream(0, "unused"))
        assert metrics["welfare"][rep] == pytest.approx(out.welfare, abs=1e-12)
        assert metrics["revenue"][rep] == pytest.approx(out.revenue, abs=1e-12)
        assert metrics["items_sold"][rep] == out.items_sold
        assert metrics["sold_all"][rep] == (1.0 if out.items_unsold == 0 else 0.0)


def test_verification_suite_quick_mode_passes():
    results = run_verification(quick=True)
    assert all(check.passed for check in results), [c for c in results if not c.passed]
