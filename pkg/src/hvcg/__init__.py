"""Multi-unit auctions under bidder collusion.

Mechanisms (uniform-price, its collusive equilibrium, and a hybrid with a
posted-price phase for a known coalition), distribution tooling, item-split
objectives, brute-force verifiers, and a reproducible experiment harness.
"""

from .distributions import (
    BUILTIN_NAMES,
    BoundsReport,
    DistributionSpec,
    builtin,
    conditional_tail_mean,
    sample,
    sample_order_statistic_u,
    validate_bounds,
)
from .harness import (
    CSV_HEADER,
    ExperimentConfig,
    ResultRow,
    emit_csv,
    emit_plot,
    run_cell,
    run_sweep,
)
from .mechanisms import (
    BestResponse,
    colluder_best_response,
    colluder_utility_given_count,
    feasible_splits,
    hvcg,
    vcg,
    vcg_with_collusion,
)
from .model import (
    AuctionConfig,
    MechanismOutcome,
    Partition,
    ValuationProfile,
    group_welfare,
    kth_largest,
)
from .objectives import (
    MarketShape,
    ObjectiveSpec,
    beta_quantile_grid,
    choose_k,
    exact_expected_welfare,
    expected_items_sold,
    objective_value,
    prob_all_items_sold,
    revenue_minorant,
    welfare_minorant,
)
from .oracle import (
    DeviationGrid,
    DsicReport,
    EnumerationBudgetError,
    MCStats,
    MECHANISM_NAMES,
    brute_force_best_response,
    check_hvcg_dsic,
    draw_valuations,
    batch_metrics,
    mc_estimate,
    run_verification,
)
from .rng import substream

__version__ = "0.1.0"

__all__ = [
    "AuctionConfig",
    "BestResponse",
    "BoundsReport",
    "BUILTIN_NAMES",
    "CSV_HEADER",
    "DeviationGrid",
    "DistributionSpec",
    "DsicReport",
    "EnumerationBudgetError",
    "ExperimentConfig",
    "MarketShape",
    "MCStats",
    "MECHANISM_NAMES",
    "MechanismOutcome",
    "ObjectiveSpec",
    "Partition",
    "ResultRow",
    "ValuationProfile",
    "batch_metrics",
    "beta_quantile_grid",
    "brute_force_best_response",
    "builtin",
    "check_hvcg_dsic",
    "choose_k",
    "colluder_best_response",
    "colluder_utility_given_count",
    "conditional_tail_mean",
    "draw_valuations",
    "emit_csv",
    "emit_plot",
    "exact_expected_welfare",
    "expected_items_sold",
    "feasible_splits",
    "group_welfare",
    "hvcg",
    "kth_largest",
    "mc_estimate",
    "objective_value",
    "prob_all_items_sold",
    "revenue_minorant",
    "run_cell",
    "run_sweep",
    "run_verification",
    "sample",
    "sample_order_statistic_u",
    "substream",
    "validate_bounds",
    "vcg",
    "vcg_with_collusion",
    "welfare_minorant",
]
