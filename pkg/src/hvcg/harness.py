"""Experiment runner: mechanism comparison sweeps, CSV and plot emission.

A sweep compares four mechanisms -- the uniform-price auction with everyone
truthful, the same auction on non-colluders only, the auction under the
coalition's best response, and the hybrid auction at its optimized split --
across a range of market sizes.  All four see identical valuation draws per
repetition (paired comparison), and each (N, repetition) pair owns its own
random substream, so output is byte-stable across runs and worker counts.
"""

from __future__ import annotations

import csv
import multiprocessing
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .distributions import builtin, sample
from .mechanisms import hvcg, vcg, vcg_with_collusion
from .model import Partition
from .objectives import OBJECTIVE_KINDS, MarketShape, ObjectiveSpec, choose_k
from .oracle import MECHANISM_NAMES, summarize
from .rng import substream

CSV_HEADER = (
    "distribution,mechanism,N,C,r,reps,seed,k_star,mean_welfare,stderr_welfare,"
    "mean_revenue,stderr_revenue,mean_items_sold,sold_all_frequency"
)

_ORDER_TOL = 1e-9


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep parameters; mirrors the CLI flags."""

    distribution: str
    items: int
    n_colluders: int
    n_from: int
    n_to: int
    n_step: int = 1
    reps: int = 1000
    master_seed: int = 0
    objective_kind: str = "welfare_minorant"
    quadrature_bins: int = 1000
    output_dir: Optional[str] = None

    def __post_init__(self) -> None:
        builtin(self.distribution)  # raises on unknown names
        if self.items < 1:
            raise ValueError("need at least one item")
        if self.n_colluders < 0:
            raise ValueError("number of colluders must be >= 0")
        if self.n_from < 1 or self.n_to < self.n_from or self.n_step < 1:
            raise ValueError("the non-colluder range must satisfy 1 <= n_from <= n_to, step >= 1")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.objective_kind not in OBJECTIVE_KINDS:
            raise ValueError(f"objective must be one of {OBJECTIVE_KINDS}")

    @property
    def n_values(self) -> range:
        return range(self.n_from, self.n_to + 1, self.n_step)


@dataclass(frozen=True)
class ResultRow:
    """One (mechanism, N) cell of a sweep, as serialized to CSV."""

    distribution: str
    mechanism: str
    n_noncolluders: int
    n_colluders: int
    items: int
    reps: int
    seed: int
    k_star: Optional[int]
    mean_welfare: float
    stderr_welfare: Optional[float]
    mean_revenue: float
    stderr_revenue: Optional[float]
    mean_items_sold: float
    sold_all_frequency: float

    def __post_init__(self) -> None:
        for value in (self.mean_welfare, self.mean_revenue, self.mean_items_sold):
            if not np.isfinite(value):
                raise ValueError("result statistics must be finite")
        if not 0.0 <= self.sold_all_frequency <= 1.0:
            raise ValueError("sold_all_frequency must lie in [0, 1]")

    def as_csv_fields(self) -> list[str]:
        def num(x: Optional[float]) -> str:
            return "" if x is None else repr(float(x))

        return [
            self.distribution,
            self.mechanism,
            str(self.n_noncolluders),
            str(self.n_colluders),
            str(self.items),
            str(self.reps),
            str(self.seed),
            "" if self.k_star is None else str(self.k_star),
            num(self.mean_welfare),
            num(self.stderr_welfare),
            num(self.mean_revenue),
            num(self.stderr_revenue),
            num(self.mean_items_sold),
            num(self.sold_all_frequency),
        ]


def run_cell(
    dist_name: str,
    n_noncolluders: int,
    n_colluders: int,
    items: int,
    k_star: int,
    reps: int,
    master_seed: int,
) -> dict[str, dict[str, np.ndarray]]:
    """Per-repetition metric arrays for all four mechanisms at one N.

    Bidders 0..N-1 are the non-colluders.  Each repetition draws once and
    feeds the same values to every mechanism; the per-draw welfare ordering
    (truthful >= collusive >= non-colluders only) is asserted on the spot.
    """
    dist = builtin(dist_name)
    partition = Partition.from_colluder_ids(
        n_noncolluders + n_colluders, range(n_noncolluders, n_noncolluders + n_colluders)
    )
    metrics = {
        name: {key: np.empty(reps) for key in ("welfare", "revenue", "items_sold", "sold_all")}
        for name in MECHANISM_NAMES
    }
    for rep in range(reps):
        rng = substream(master_seed, "sweep", n_noncolluders, rep)
        values = sample(dist, rng, n_noncolluders + n_colluders)
        outcomes = {
            "vcg_all_truthful": vcg(values, items, partition=partition),
            "vcg_noncolluders_only": vcg(values[:n_noncolluders], items),
            "vcg_with_collusion": vcg_with_collusion(values, partition, items),
            "hvcg": hvcg(values, partition, items, k_star, rng),
        }
        w_all = outcomes["vcg_all_truthful"].welfare
        w_col = outcomes["vcg_with_collusion"].welfare
        w_nc = outcomes["vcg_noncolluders_only"].welfare
        if not (w_all >= w_col - _ORDER_TOL and w_col >= w_nc - _ORDER_TOL):
            raise AssertionError(
                f"per-draw welfare ordering violated at N={n_noncolluders}, rep={rep}: "
                f"{w_all} vs {w_col} vs {w_nc}"
            )
        for name, out in outcomes.items():
            metrics[name]["welfare"][rep] = out.welfare
            metrics[name]["revenue"][rep] = out.revenue
            metrics[name]["items_sold"][rep] = out.items_sold
            metrics[name]["sold_all"][rep] = 1.0 if out.items_unsold == 0 else 0.0
    return metrics


def _sweep_one_n(config: ExperimentConfig, n_noncolluders: int) -> list[ResultRow]:
    dist = builtin(config.distribution)
    shape = MarketShape(n_noncolluders, config.n_colluders, config.items)
    objective = ObjectiveSpec(config.objective_kind, dist, config.quadrature_bins)
    k_star = choose_k(objective, shape)
    cell = run_cell(
        config.distribution,
        n_noncolluders,
        config.n_colluders,
        config.items,
        k_star,
        config.reps,
        config.master_seed,
    )
    rows = []
    for name in MECHANISM_NAMES:
        stats = summarize(name, cell[name], k_star=k_star if name == "hvcg" else None)
        rows.append(
            ResultRow(
                distribution=config.distribution,
                mechanism=name,
                n_noncolluders=n_noncolluders,
                n_colluders=config.n_colluders,
                items=config.items,
                reps=config.reps,
                seed=config.master_seed,
                k_star=stats.k_star,
                mean_welfare=stats.mean_welfare,
                stderr_welfare=stats.stderr_welfare,
                mean_revenue=stats.mean_revenue,
                stderr_revenue=stats.stderr_revenue,
                mean_items_sold=stats.mean_items_sold,
                sold_all_frequency=stats.sold_all_frequency,
            )
        )
    return rows


def run_sweep(config: ExperimentConfig, workers: int = 1) -> list[ResultRow]:
    """Run the four-mechanism comparison for every N in the configured range.

    Substreams are keyed by (seed, N, repetition), so the rows for any N are
    identical no matter how the work is scheduled.
    """
    n_values = list(config.n_values)
    if workers <= 1:
        cells = [_sweep_one_n(config, n) for n in n_values]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            cells = pool.starmap(_sweep_one_n, [(config, n) for n in n_values])
    return [row for cell in cells for row in cell]


def emit_csv(rows: list[ResultRow], path: "str | Path") -> Path:
    """Write rows under the fixed header; refuses an empty row list."""
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for row in rows:
            writer.writerow(row.as_csv_fields())
    return path


def emit_plot(rows: list[ResultRow], out_dir: "str | Path") -> list[Path]:
    """Write welfare-vs-N and revenue-vs-N line charts as standalone SVGs."""
    if not rows:
        raise ValueError("no rows to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dist_names = sorted({row.distribution for row in rows})
    title_suffix = f"{', '.join(dist_names)} (C={rows[0].n_colluders}, r={rows[0].items})"
    written = []
    for metric, label, fname in (
        ("mean_welfare", "mean welfare", "welfare_vs_n.svg"),
        ("mean_revenue", "mean revenue", "revenue_vs_n.svg"),
    ):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for name in MECHANISM_NAMES:
            series = sorted(
                ((r.n_noncolluders, getattr(r, metric)) for r in rows if r.mechanism == name)
            )
            if series:
                xs, ys = zip(*series)
                ax.plot(xs, ys, marker="o", markersize=3, label=name)
        ax.set_xlabel("number of non-colluding bidders")
        ax.set_ylabel(label)
        ax.set_title(f"{label} vs N, {title_suffix}")
        ax.legend()
        ax.grid(True, alpha=0.3)
        path = out_dir / fname
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written
