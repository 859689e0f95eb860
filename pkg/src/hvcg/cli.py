"""Command-line interface.

Subcommands:
  simulate       compare the four mechanisms at one market size
  sweep          run the full comparison over a range of N, write CSV + plots
  objective      print the split criterion M(k) and sell-out probability P(k)
  best-response  closed-form coalition best response for explicit values
  verify         run the brute-force verification suite

Exit codes: 0 success, 1 verification failure, 2 invalid arguments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .distributions import BUILTIN_NAMES, builtin
from .harness import ExperimentConfig, ResultRow, emit_csv, emit_plot, run_cell
from .mechanisms import colluder_best_response, feasible_splits
from .model import Partition
from .objectives import MarketShape, ObjectiveSpec, choose_k, objective_value, prob_all_items_sold
from .oracle import MECHANISM_NAMES, run_verification, summarize

_OBJECTIVE_CLI_NAMES = {
    "exact": "exact_welfare",
    "welfare-minorant": "welfare_minorant",
    "revenue-minorant": "revenue_minorant",
}


def _add_objective_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--objective",
        choices=sorted(_OBJECTIVE_CLI_NAMES),
        default="welfare-minorant",
        help="split criterion for the hybrid mechanism",
    )
    parser.add_argument("--bins", type=int, default=1000, help="quadrature bins")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hvcg",
        description="Multi-unit auctions under bidder collusion: mechanisms, objectives, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="compare the four mechanisms at one market size")
    sim.add_argument("--dist", type=str.lower, choices=BUILTIN_NAMES, required=True)
    sim.add_argument("--n", type=int, required=True, help="non-colluding bidders")
    sim.add_argument("--c", type=int, required=True, help="colluding bidders")
    sim.add_argument("--r", type=int, required=True, help="items for sale")
    sim.add_argument("--k", default="auto", help="item split for the hybrid mechanism, or 'auto'")
    sim.add_argument("--reps", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    _add_objective_args(sim)
    sim.add_argument("--out", type=Path, required=True, help="CSV output path")

    swp = sub.add_parser("sweep", help="run the comparison over a range of N")
    swp.add_argument("--dist", type=str.lower, choices=BUILTIN_NAMES, required=True)
    swp.add_argument("--c", type=int, required=True)
    swp.add_argument("--r", type=int, required=True)
    swp.add_argument("--n-from", type=int, required=True)
    swp.add_argument("--n-to", type=int, required=True)
    swp.add_argument("--n-step", type=int, default=1)
    swp.add_argument("--reps", type=int, default=1000)
    swp.add_argument("--seed", type=int, default=0)
    _add_objective_args(swp)
    swp.add_argument("--workers", type=int, default=1)
    swp.add_argument("--out", type=Path, required=True, help="output directory for CSV and plots")

    obj = sub.add_parser("objective", help="print k, M(k), P(k) for one market shape")
    obj.add_argument("--dist", type=str.lower, choices=BUILTIN_NAMES, required=True)
    obj.add_argument("--n", type=int, required=True)
    obj.add_argument("--c", type=int, required=True)
    obj.add_argument("--r", type=int, required=True)
    _add_objective_args(obj)

    br = sub.add_parser("best-response", help="coalition best response for explicit values")
    br.add_argument("--values", required=True, help="comma-separated true values for bidders 0..M-1")
    br.add_argument("--colluders", required=True, help="comma-separated colluding bidder ids")
    br.add_argument("--r", type=int, required=True)

    ver = sub.add_parser("verify", help="run the brute-force verification suite")
    ver.add_argument("--quick", action="store_true", help="smaller instance counts")
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    dist = builtin(args.dist)
    shape = MarketShape(args.n, args.c, args.r)
    objective = ObjectiveSpec(_OBJECTIVE_CLI_NAMES[args.objective], dist, args.bins)
    if args.k == "auto":
        k_star = choose_k(objective, shape)
    else:
        k_star = int(args.k)
        if k_star not in shape.feasible_k:
            raise ValueError(f"k={k_star} is not feasible; allowed range 0..{shape.feasible_k.stop - 1}")
    cell = run_cell(args.dist, args.n, args.c, args.r, k_star, args.reps, args.seed)
    rows = []
    print(f"{'mechanism':24} {'k*':>4} {'welfare':>12} {'revenue':>12} {'items':>8} {'sold-all':>9}")
    for name in MECHANISM_NAMES:
        stats = summarize(name, cell[name], k_star=k_star if name == "hvcg" else None)
        rows.append(
            ResultRow(
                distribution=args.dist,
                mechanism=name,
                n_noncolluders=args.n,
                n_colluders=args.c,
                items=args.r,
                reps=args.reps,
                seed=args.seed,
                k_star=stats.k_star,
                mean_welfare=stats.mean_welfare,
                stderr_welfare=stats.stderr_welfare,
                mean_revenue=stats.mean_revenue,
                stderr_revenue=stats.stderr_revenue,
                mean_items_sold=stats.mean_items_sold,
                sold_all_frequency=stats.sold_all_frequency,
            )
        )
        k_text = "" if stats.k_star is None else str(stats.k_star)
        print(
            f"{name:24} {k_text:>4} {stats.mean_welfare:12.5f} {stats.mean_revenue:12.5f} "
            f"{stats.mean_items_sold:8.3f} {stats.sold_all_frequency:9.4f}"
        )
    emit_csv(rows, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        distribution=args.dist,
        items=args.r,
        n_colluders=args.c,
        n_from=args.n_from,
        n_to=args.n_to,
        n_step=args.n_step,
        reps=args.reps,
        master_seed=args.seed,
        objective_kind=_OBJECTIVE_CLI_NAMES[args.objective],
        quadrature_bins=args.bins,
        output_dir=str(args.out),
    )
    from .harness import run_sweep

    rows = run_sweep(config, workers=args.workers)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = emit_csv(rows, out_dir / "results.csv")
    plot_paths = emit_plot(rows, out_dir)
    for path in [csv_path, *plot_paths]:
        print(f"wrote {path}")
    return 0


def _cmd_objective(args: argparse.Namespace) -> int:
    dist = builtin(args.dist)
    shape = MarketShape(args.n, args.c, args.r)
    objective = ObjectiveSpec(_OBJECTIVE_CLI_NAMES[args.objective], dist, args.bins)
    k_star = choose_k(objective, shape)
    print(f"{'k':>4} {'M(k)':>14} {'P(k)':>10}")
    for k in shape.feasible_k:
        mark = "  <- k*" if k == k_star else ""
        print(f"{k:>4} {objective_value(objective, shape, k):14.6f} {prob_all_items_sold(k, shape):10.6f}{mark}")
    return 0


def _cmd_best_response(args: argparse.Namespace) -> int:
    values = tuple(float(x) for x in args.values.split(","))
    colluders = [int(x) for x in args.colluders.split(",")] if args.colluders.strip() else []
    partition = Partition.from_colluder_ids(len(values), colluders)
    response = colluder_best_response(values, partition, args.r)
    print(f"items taken by the coalition: {response.items_taken}")
    print(f"joint utility: {response.joint_utility!r}")
    for i in sorted(response.bids):
        print(f"  bidder {i}: true value {values[i]!r} -> bid {response.bids[i]!r}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    results = run_verification(quick=args.quick)
    failures = 0
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.detail}")
        failures += 0 if check.passed else 1
    if failures:
        print(f"{failures} of {len(results)} checks failed")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "objective": _cmd_objective,
    "best-response": _cmd_best_response,
    "verify": _cmd_verify,
}


def main(argv: "list[str] | None" = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
