from pathlib import Path

import numpy as np
import pytest

from hvcg.harness import (
    CSV_HEADER,
    ExperimentConfig,
    ResultRow,
    emit_csv,
    emit_plot,
    run_cell,
    run_sweep,
)
from hvcg.oracle import MECHANISM_NAMES


def _small_config(**overrides):
    fields = dict(
        distribution="uniform",
        items=3,
        n_colluders=2,
        n_from=1,
        n_to=6,
        n_step=1,
        reps=40,
        master_seed=123,
        objective_kind="welfare_minorant",
        quadrature_bins=256,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


def test_config_validation():
    with pytest.raises(ValueError):
        _small_config(distribution="cauchy")
    with pytest.raises(ValueError):
        _small_config(n_from=0)
    with pytest.raises(ValueError):
        _small_config(n_from=5, n_to=2)
    with pytest.raises(ValueError):
        _small_config(reps=0)
    with pytest.raises(ValueError):
        _small_config(objective_kind="sharpe")
    assert list(_small_config(n_step=2).n_values) == [1, 3, 5]


def test_run_cell_reports_all_mechanisms():
    cell = run_cell("uniform", 4, 2, 3, k_star=2, reps=25, master_seed=5)
    assert set(cell) == set(MECHANISM_NAMES)
    for metrics in cell.values():
        assert metrics["welfare"].shape == (25,)
        assert np.all(metrics["revenue"] >= 0)


def test_run_cell_is_reproducible_and_mechanism_isolated():
    a = run_cell("trapezoidal", 5, 3, 4, k_star=2, reps=30, master_seed=9)
    b = run_cell("trapezoidal", 5, 3, 4, k_star=2, reps=30, master_seed=9)
    for name in MECHANISM_NAMES:
        for key in a[name]:
            assert np.array_equal(a[name][key], b[name][key])


def test_run_cell_paired_welfare_ordering():
    cell = run_cell("quadratic", 6, 4, 4, k_star=3, reps=200, master_seed=17)
    assert np.all(
        cell["vcg_all_truthful"]["welfare"] >= cell["vcg_with_collusion"]["welfare"] - 1e-9
    )
    assert np.all(
        cell["vcg_with_collusion"]["welfare"] >= cell["vcg_noncolluders_only"]["welfare"] - 1e-9
    )


def test_sweep_without_colluders_collapses_mechanisms():
    config = _small_config(n_colluders=0, n_from=4, n_to=8, items=3, reps=30)
    rows = {(row.mechanism, row.n_noncolluders): row for row in run_sweep(config)}
    for n in config.n_values:
        base = rows[("vcg_noncolluders_only", n)]
        for name in ("vcg_all_truthful", "vcg_with_collusion"):
            other = rows[(name, n)]
            assert other.mean_welfare == base.mean_welfare
            assert other.mean_revenue == base.mean_revenue
        # with N > r the optimized split is k* = r and the hybrid run matches too
        hybrid = rows[("hvcg", n)]
        assert hybrid.k_star == config.items
        assert hybrid.mean_welfare == pytest.approx(base.mean_welfare, abs=1e-12)
        assert hybrid.mean_revenue == pytest.approx(base.mean_revenue, abs=1e-12)


def test_sweep_row_fields_and_k_star_column():
    config = _small_config(n_from=2, n_to=4, reps=10)
    rows = run_sweep(config)
    assert len(rows) == 4 * len(list(config.n_values))
    for row in rows:
        if row.mechanism == "hvcg":
            assert row.k_star is not None
        else:
            assert row.k_star is None
        assert 0.0 <= row.sold_all_frequency <= 1.0


def test_sweep_single_rep_has_empty_stderr_fields(tmp_path):
    config = _small_config(n_from=2, n_to=2, reps=1)
    rows = run_sweep(config)
    path = emit_csv(rows, tmp_path / "one.csv")
    body = path.read_text().splitlines()
    assert len(body) == 1 + 4
    for line in body[1:]:
        fields = line.split(",")
        assert fields[9] == "" and fields[11] == ""  # stderr columns absent


def test_sweep_deterministic_across_runs_and_workers(tmp_path):
    config = _small_config()
    rows_a = run_sweep(config, workers=1)
    rows_b = run_sweep(config, workers=1)
    rows_c = run_sweep(config, workers=4)
    a = emit_csv(rows_a, tmp_path / "a.csv").read_bytes()
    b = emit_csv(rows_b, tmp_path / "b.csv").read_bytes()
    c = emit_csv(rows_c, tmp_path / "c.csv").read_bytes()
    assert a == b == c


def test_emit_csv_header_and_shape(tmp_path):
    config = _small_config(n_from=1, n_to=2, reps=5)
    rows = run_sweep(config)
    path = emit_csv(rows, tmp_path / "out.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(rows)


def test_emit_csv_rejects_empty():
    with pytest.raises(ValueError):
        emit_csv([], "unused.csv")


def test_emit_plot_writes_vector_graphics(tmp_path):
    config = _small_config(n_from=1, n_to=4, reps=10)
    rows = run_sweep(config)
    paths = emit_plot(rows, tmp_path)
    assert [p.name for p in paths] == ["welfare_vs_n.svg", "revenue_vs_n.svg"]
    for path in paths:
        content = path.read_text()
        assert content.lstrip().startswith("<?xml")
        assert "<svg" in content


def test_emit_plot_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_plot([], tmp_path)


def test_result_row_validates_statistics():
    with pytest.raises(ValueError):
        ResultRow(
            distribution="uniform",
            mechanism="hvcg",
            n_noncolluders=2,
            n_colluders=1,
            items=2,
            reps=10,
            seed=0,
            k_star=1,
            mean_welfare=float("nan"),
            stderr_welfare=None,
            mean_revenue=0.0,
            stderr_revenue=None,
            mean_items_sold=1.0,
            sold_all_frequency=0.5,
        )
