"""Independent brute-force verifiers and Monte Carlo estimators.

Everything here deliberately avoids the closed forms it is meant to check:
best responses are found by enumerating coalition bid vectors on a grid,
truthfulness is checked by enumerating deviations, and expectations are
estimated by seeded simulation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import DistributionSpec, builtin, sample
from .mechanisms import colluder_best_response, feasible_splits, hvcg, vcg, vcg_with_collusion
from .model import Partition, ValuationProfile, group_welfare
from .objectives import MarketShape, ObjectiveSpec, choose_k
from .rng import substream

MECHANISM_NAMES = ("vcg_all_truthful", "vcg_noncolluders_only", "vcg_with_collusion", "hvcg")

DEFAULT_ENUMERATION_BUDGET = 1_000_000

_GAIN_TOL = 1e-9


class EnumerationBudgetError(RuntimeError):
    """Raised when an exhaustive check would exceed its enumeration budget."""


@dataclass(frozen=True)
class DeviationGrid:
    """Finite ascending set of bid levels used for exhaustive deviation search.

    Contains 0, every bidder's true value, and each non-colluder bid
    bracketed from both sides by a small offset, so strict-vs-weak threshold
    bugs show up.
    """

    points: tuple[float, ...]

    def __post_init__(self) -> None:
        if list(self.points) != sorted(set(self.points)):
            raise ValueError("grid points must be strictly ascending and unique")
        if any(p < 0 for p in self.points):
            raise ValueError("bids cannot be negative")

    @classmethod
    def for_instance(
        cls,
        true_values: "ValuationProfile | Sequence[float]",
        partition: Partition,
        delta: float = 1e-6,
    ) -> "DeviationGrid":
        values = ValuationProfile.of(true_values).values
        points = {0.0}
        points.update(values)
        for i in partition.noncolluders:
            points.add(values[i] + delta)
            if values[i] - delta > 0:
                points.add(values[i] - delta)
        return cls(tuple(sorted(points)))


def _vcg_winners_price(bids: Sequence[float], r: int) -> tuple[list[int], float]:
    order = sorted(range(len(bids)), key=lambda i: (-bids[i], i))
    winners = order[: min(r, len(bids))]
    price = bids[order[r]] if r < len(bids) else 0.0
    return winners, price


def _top_value_cumsums(values: Sequence[float]) -> list[float]:
    """cum[m] = sum of the m largest values."""
    ordered = sorted(values, reverse=True)
    cum = [0.0]
    for v in ordered:
        cum.append(cum[-1] + v)
    return cum


@dataclass(frozen=True)
class BruteForceResult:
    joint_utility: float
    bids: dict[int, float]
    items_to_colluders: int


def brute_force_best_response(
    true_values: "ValuationProfile | Sequence[float]",
    partition: Partition,
    r: int,
    grid: DeviationGrid,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> BruteForceResult:
    """Maximize the coalition's joint utility by exhaustive grid search.

    Every coalition bid vector on the grid is played against truthful rivals
    in the uniform-price auction; coalition items are credited at its top
    true values (internal transfers).
    """
    values = ValuationProfile.of(true_values).values
    coll_ids = sorted(partition.colluders)
    n_coll = len(coll_ids)
    n_vectors = len(grid.points) ** n_coll
    if n_vectors > budget:
        raise EnumerationBudgetError(
            f"{len(grid.points)}^{n_coll} = {n_vectors} bid vectors exceed the budget of {budget}"
        )

    coalition_cum = _top_value_cumsums([values[i] for i in coll_ids])
    coll_set = set(coll_ids)
    best_utility = -math.inf
    best_vector: tuple[float, ...] = ()
    best_items = 0
    merged = list(values)
    for vector in itertools.product(grid.points, repeat=n_coll):
        for i, b in zip(coll_ids, vector):
            merged[i] = b
        winners, price = _vcg_winners_price(merged, r)
        m = sum(1 for i in winners if i in coll_set)
        utility = coalition_cum[m] - m * price
        if utility > best_utility:
            best_utility, best_vector, best_items = utility, vector, m
    return BruteForceResult(
        joint_utility=best_utility,
        bids=dict(zip(coll_ids, best_vector)),
        items_to_colluders=best_items,
    )


# --- truthfulness checks -------------------------------------------------


def _phase1_utility(nc_ids: list[int], nc_bids: dict[int, float], values, k: int, bidder: int) -> float:
    """A non-colluder's utility in the k-item phase (independent of phase 2)."""
    ranked = sorted(nc_ids, key=lambda i: (-nc_bids[i], i))
    price = nc_bids[ranked[k]]
    if bidder in ranked[:k]:
        return values[bidder] - price
    return 0.0


def _coalition_posted_utility(coalition_bids: Sequence[float], price: float, slots: int, cum: list[float]) -> float:
    """Coalition utility in the posted-price phase.

    Members bidding strictly above the price qualify; min(#qualifiers, slots)
    items are won.  Which qualifiers win is irrelevant under internal
    transfers, so the expectation over the random pick is exact.
    """
    q = sum(1 for b in coalition_bids if b > price)
    m = min(q, slots)
    return cum[m] - m * price


def _pooled_coalition_utility(
    n_rival_qualifiers: int,
    n_coalition_qualifiers: int,
    r: int,
    price: float,
    cum: list[float],
    enumerate_limit: int = 5000,
) -> float:
    """Expected coalition utility when r items are raffled among ALL bidders
    above the price (the broken variant without the per-group split).

    Exact subset enumeration for small qualifier pools, otherwise the
    closed-form distribution of the coalition's winner count.
    """
    total = n_rival_qualifiers + n_coalition_qualifiers
    items = min(r, total)
    if items == 0 or n_coalition_qualifiers == 0:
        return 0.0
    if math.comb(total, items) <= enumerate_limit:
        # qualifiers 0..cq-1 are coalition members, the rest are rivals
        acc = 0.0
        count = 0
        for combo in itertools.combinations(range(total), items):
            m = sum(1 for i in combo if i < n_coalition_qualifiers)
            acc += cum[m] - m * price
            count += 1
        return acc / count
    lo = max(0, items - n_rival_qualifiers)
    hi = min(n_coalition_qualifiers, items)
    denom = math.comb(total, items)
    acc = 0.0
    for m in range(lo, hi + 1):
        p = math.comb(n_coalition_qualifiers, m) * math.comb(n_rival_qualifiers, items - m) / denom
        acc += p * (cum[m] - m * price)
    return acc


def _pooled_noncolluder_utility(
    bidder: int,
    nc_ids: list[int],
    nc_bids: dict[int, float],
    coalition_bids: Sequence[float],
    values,
    r: int,
    k: int,
) -> float:
    """Expected utility of one non-colluder under the pooled raffle."""
    ranked = sorted(nc_ids, key=lambda i: (-nc_bids[i], i))
    price = nc_bids[ranked[k]]
    rival_q = [i for i in nc_ids if nc_bids[i] > price]
    coal_q = sum(1 for b in coalition_bids if b > price)
    total = len(rival_q) + coal_q
    if bidder not in rival_q or total == 0:
        return 0.0
    return min(r, total) / total * (values[bidder] - price)


@dataclass(frozen=True)
class DsicReport:
    passed: bool
    max_noncolluder_gain: float
    max_colluder_gain: float
    deviations_checked: int


def check_hvcg_dsic(
    true_values: "ValuationProfile | Sequence[float]",
    partition: Partition,
    r: int,
    k: int,
    grid: DeviationGrid,
    pooled: bool = False,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> DsicReport:
    """Exhaustively test that no bidder (nor the coalition jointly) can beat
    truthful bidding in the hybrid auction by more than 1e-9.

    With ``pooled=True`` the broken variant is checked instead, in which all
    r items are raffled among every above-price bidder; this variant is
    expected to fail.
    """
    values = ValuationProfile.of(true_values).values
    nc_ids = sorted(partition.noncolluders)
    coll_ids = sorted(partition.colluders)
    if k not in feasible_splits(r, len(nc_ids)):
        raise ValueError(f"k={k} is not a feasible split for r={r}, N={len(nc_ids)}")
    n_coll = len(coll_ids)
    n_vectors = len(grid.points) ** n_coll
    if n_vectors > budget:
        raise EnumerationBudgetError(
            f"{len(grid.points)}^{n_coll} = {n_vectors} bid vectors exceed the budget of {budget}"
        )

    truthful_nc = {i: values[i] for i in nc_ids}
    truthful_coal = [values[i] for i in coll_ids]
    coalition_cum = _top_value_cumsums(truthful_coal)
    slots = r - k
    checked = 0

    def nc_utility(bidder: int, nc_bids: dict[int, float]) -> float:
        if pooled:
            return _pooled_noncolluder_utility(bidder, nc_ids, nc_bids, truthful_coal, values, r, k)
        return _phase1_utility(nc_ids, nc_bids, values, k, bidder)

    def coalition_utility(coalition_bids: Sequence[float]) -> float:
        ranked = sorted(nc_ids, key=lambda i: (-truthful_nc[i], i))
        price = truthful_nc[ranked[k]]
        if pooled:
            rival_q = sum(1 for i in nc_ids if truthful_nc[i] > price)
            coal_q = sum(1 for b in coalition_bids if b > price)
            return _pooled_coalition_utility(rival_q, coal_q, r, price, coalition_cum)
        return _coalition_posted_utility(coalition_bids, price, slots, coalition_cum)

    max_nc_gain = 0.0
    for i in nc_ids:
        base = nc_utility(i, truthful_nc)
        for d in grid.points:
            if d == values[i]:
                continue
            deviated = dict(truthful_nc)
            deviated[i] = d
            max_nc_gain = max(max_nc_gain, nc_utility(i, deviated) - base)
            checked += 1

    max_coal_gain = 0.0
    if coll_ids:
        base = coalition_utility(truthful_coal)
        for vector in itertools.product(grid.points, repeat=n_coll):
            max_coal_gain = max(max_coal_gain, coalition_utility(vector) - base)
            checked += 1

    passed = max_nc_gain <= _GAIN_TOL and max_coal_gain <= _GAIN_TOL
    return DsicReport(passed, max_nc_gain, max_coal_gain, checked)


# --- Monte Carlo estimation ----------------------------------------------


@dataclass(frozen=True)
class MCStats:
    mechanism: str
    reps: int
    mean_welfare: float
    stderr_welfare: Optional[float]
    mean_revenue: float
    stderr_revenue: Optional[float]
    mean_items_sold: float
    stderr_items_sold: Optional[float]
    sold_all_frequency: float
    k_star: Optional[int] = None


def draw_valuations(
    dist: DistributionSpec,
    n_bidders: int,
    reps: int,
    master_seed: int,
    label: str = "mc",
) -> np.ndarray:
    """One row of i.i.d. valuations per repetition, each row from its own
    substream so results do not depend on execution order or worker count."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    out = np.empty((reps, n_bidders))
    for rep in range(reps):
        out[rep] = sample(dist, substream(master_seed, label, rep), n_bidders)
    return out


def batch_metrics(
    mechanism: str,
    values: np.ndarray,
    shape: MarketShape,
    k: Optional[int] = None,
) -> dict[str, np.ndarray]:
    """Per-repetition welfare/revenue/items-sold arrays for one mechanism.

    ``values`` has one row per repetition; the first N columns are the
    non-colluders.  The arithmetic mirrors the mechanism implementations
    row-by-row (tests cross-check this against direct calls).
    """
    n, c, r = shape.n_noncolluders, shape.n_colluders, shape.items
    if values.ndim != 2 or values.shape[1] != n + c:
        raise ValueError("values must be (reps, N + C)")
    reps = values.shape[0]
    vn = np.sort(values[:, :n], axis=1)[:, ::-1]
    vc = np.sort(values[:, n:], axis=1)[:, ::-1] if c else np.zeros((reps, 0))
    cum_c = np.concatenate([np.zeros((reps, 1)), np.cumsum(vc, axis=1)], axis=1)

    if mechanism == "vcg_all_truthful":
        merged = np.sort(values, axis=1)[:, ::-1]
        sold = min(r, n + c)
        price = merged[:, r] if r < n + c else np.zeros(reps)
        welfare = merged[:, :sold].sum(axis=1)
        items = np.full(reps, sold, dtype=float)
    elif mechanism == "vcg_noncolluders_only":
        sold = min(r, n)
        price = vn[:, r] if r < n else np.zeros(reps)
        welfare = vn[:, :sold].sum(axis=1)
        items = np.full(reps, sold, dtype=float)
    elif mechanism == "vcg_with_collusion":
        rc_max = min(c, r)
        pad = np.concatenate([vn, np.zeros((reps, max(0, r + 1 - n)))], axis=1)
        utilities = np.stack(
            [cum_c[:, rc] - rc * pad[:, r - rc] for rc in range(rc_max + 1)], axis=1
        )
        rc_star = np.argmax(utilities, axis=1)
        cum_n = np.concatenate([np.zeros((reps, 1)), np.cumsum(vn, axis=1)], axis=1)
        nc_items = np.minimum(n, r - rc_star)
        rows = np.arange(reps)
        welfare = cum_n[rows, nc_items] + cum_c[rows, rc_star]
        price = pad[rows, r - rc_star]
        sold = min(r, n + c)
        items = np.full(reps, sold, dtype=float)
    elif mechanism == "hvcg":
        if k is None:
            raise ValueError("hvcg needs an item split k")
        if k not in shape.feasible_k:
            raise ValueError(f"k={k} is not a feasible split")
        price = vn[:, k]
        qualifiers = (values[:, n:] > price[:, None]).sum(axis=1) if c else np.zeros(reps, dtype=int)
        m = np.minimum(qualifiers, r - k)
        rows = np.arange(reps)
        welfare = vn[:, :k].sum(axis=1) + cum_c[rows, m]
        items = (k + m).astype(float)
    else:
        raise ValueError(f"unknown mechanism {mechanism!r}; choose from {MECHANISM_NAMES}")

    revenue = price * items
    return {
        "welfare": welfare,
        "revenue": revenue,
        "items_sold": items,
        "sold_all": (items == r).astype(float),
    }


def _mean_stderr(x: np.ndarray) -> tuple[float, Optional[float]]:
    mean = float(np.mean(x))
    if x.size < 2:
        return mean, None
    return mean, float(np.std(x, ddof=1) / math.sqrt(x.size))


def summarize(mechanism: str, metrics: dict[str, np.ndarray], k_star: Optional[int] = None) -> MCStats:
    mw, sw = _mean_stderr(metrics["welfare"])
    mr, sr = _mean_stderr(metrics["revenue"])
    mi, si = _mean_stderr(metrics["items_sold"])
    return MCStats(
        mechanism=mechanism,
        reps=metrics["welfare"].size,
        mean_welfare=mw,
        stderr_welfare=sw,
        mean_revenue=mr,
        stderr_revenue=sr,
        mean_items_sold=mi,
        stderr_items_sold=si,
        sold_all_frequency=float(np.mean(metrics["sold_all"])),
        k_star=k_star,
    )


def mc_estimate(
    mechanism: str,
    dist: DistributionSpec,
    shape: MarketShape,
    reps: int,
    master_seed: int,
    k: "int | str | None" = None,
    objective: Optional[ObjectiveSpec] = None,
) -> MCStats:
    """Seeded Monte Carlo estimate of one mechanism's outcome statistics.

    Each repetition draws fresh valuations from its own substream, so the
    result is a pure function of the arguments.  For ``hvcg``, pass an
    integer ``k`` or ``k="auto"`` with an objective to optimize the split.
    """
    if mechanism not in MECHANISM_NAMES:
        raise ValueError(f"unknown mechanism {mechanism!r}; choose from {MECHANISM_NAMES}")
    k_star: Optional[int] = None
    if mechanism == "hvcg":
        if k == "auto" or k is None:
            if objective is None:
                raise ValueError("hvcg with k='auto' needs an objective")
            k_star = choose_k(objective, shape)
        else:
            k_star = int(k)
    values = draw_valuations(dist, shape.n_noncolluders + shape.n_colluders, reps, master_seed)
    metrics = batch_metrics(mechanism, values, shape, k=k_star)
    return summarize(mechanism, metrics, k_star=k_star)


# --- verification suite (CLI `verify`) -----------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_instance(rng: np.random.Generator, max_bidders: int, max_items: int):
    m = int(rng.integers(2, max_bidders + 1))
    n_coll = int(rng.integers(1, min(3, m - 1) + 1))
    r = int(rng.integers(1, max_items + 1))
    values = tuple(rng.random(m))
    colluders = rng.choice(m, size=n_coll, replace=False)
    return values, Partition.from_colluder_ids(m, colluders.tolist()), r


def run_verification(quick: bool = False, master_seed: int = 20_240_901) -> list[CheckResult]:
    """The oracle suite behind the ``verify`` CLI command."""
    results: list[CheckResult] = []
    delta = 1e-6

    # closed-form best response vs exhaustive grid search
    n_instances = 50 if quick else 200
    rng = substream(master_seed, "verify-best-response")
    worst = 0.0
    agree = True
    for _ in range(n_instances):
        values, partition, r = _random_instance(rng, max_bidders=6, max_items=3)
        grid = DeviationGrid.for_instance(values, partition, delta)
        brute = brute_force_best_response(values, partition, r, grid)
        closed = colluder_best_response(values, partition, r)
        gap = abs(brute.joint_utility - closed.joint_utility)
        worst = max(worst, gap)
        if gap > delta * r + 1e-9:
            agree = False
        truthful_items = vcg(values, r, partition=partition).items_to_colluders
        if brute.items_to_colluders > truthful_items:
            agree = False
    results.append(
        CheckResult(
            "best-response grid search matches the closed form",
            agree,
            f"{n_instances} instances, worst gap {worst:.2e}",
        )
    )

    # truthfulness of the hybrid auction, all feasible splits
    n_instances = 30 if quick else 100
    rng = substream(master_seed, "verify-dsic")
    dsic_ok = True
    worst_gain = 0.0
    for _ in range(n_instances):
        values, partition, r = _random_instance(rng, max_bidders=6, max_items=3)
        grid = DeviationGrid.for_instance(values, partition, delta)
        for k in feasible_splits(r, len(partition.noncolluders)):
            report = check_hvcg_dsic(values, partition, r, k, grid)
            worst_gain = max(worst_gain, report.max_noncolluder_gain, report.max_colluder_gain)
            dsic_ok = dsic_ok and report.passed
    results.append(
        CheckResult(
            "hybrid auction is deviation-proof on random instances",
            dsic_ok,
            f"{n_instances} instances, worst gain {worst_gain:.2e}",
        )
    )

    # the pooled-raffle variant must NOT be deviation-proof
    values = (1.0, 2.0, 1.0, 2.0, 3.0)
    partition = Partition.from_colluder_ids(5, [2, 3, 4])
    grid = DeviationGrid.for_instance(values, partition, delta)
    pooled = check_hvcg_dsic(values, partition, r=2, k=1, grid=grid, pooled=True)
    results.append(
        CheckResult(
            "pooled-raffle variant admits a profitable coalition deviation",
            not pooled.passed and pooled.max_colluder_gain > 1e-6,
            f"coalition gains {pooled.max_colluder_gain:.4f} by overbidding",
        )
    )

    # seeded estimates are reproducible
    shape = MarketShape(3, 2, 2)
    uniform = builtin("uniform")
    a = mc_estimate("vcg_with_collusion", uniform, shape, reps=200, master_seed=7)
    b = mc_estimate("vcg_with_collusion", uniform, shape, reps=200, master_seed=7)
    results.append(
        CheckResult(
            "seeded Monte Carlo estimates are reproducible",
            a == b,
            f"mean welfare {a.mean_welfare:.6f}",
        )
    )

    # estimator sanity against a closed form: top of two uniforms
    reps = 20_000 if quick else 100_000
    stats = mc_estimate("vcg_noncolluders_only", uniform, MarketShape(2, 0, 1), reps=reps, master_seed=11)
    gap = abs(stats.mean_welfare - 2.0 / 3.0)
    bound = 3.0 * (stats.stderr_welfare or 0.0)
    results.append(
        CheckResult(
            "estimated welfare of the 1-of-2 auction matches 2/3",
            gap <= bound,
            f"gap {gap:.2e} vs 3*stderr {bound:.2e}",
        )
    )
    return results
