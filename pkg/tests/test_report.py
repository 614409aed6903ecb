"""Tests for ies.report and ies.storage: run directory contents and atomic writes."""

import json
import math

import pandas as pd
import pytest

from ies.constants import SCHEMA_VERSION
from ies.report import _clean, report, summary_dict, write_sweep
from ies.storage import (
    RUN_FILES,
    atomic_write_json,
    load_summary,
    load_table,
    missing_files,
    prepare_out_dir,
)

# ---------------------------------------------------------------------------
# Storage
# ---------------------------------------------------------------------------


def test_prepare_out_dir_creates_parents(tmp_path):
    out = prepare_out_dir(tmp_path / "a" / "b")
    assert out.is_dir()


def test_atomic_write_json_is_sorted_and_leaves_no_temp(tmp_path):
    path = tmp_path / "summary.json"
    atomic_write_json(path, {"b": 1, "a": 2})

    assert path.read_text().index('"a"') < path.read_text().index('"b"')
    assert [p.name for p in tmp_path.iterdir()] == ["summary.json"]
    assert load_summary(tmp_path) == {"a": 2, "b": 1}


def test_load_from_empty_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_summary(tmp_path)
    with pytest.raises(FileNotFoundError):
        load_table(tmp_path, "costs.csv")
    assert missing_files(tmp_path) == list(RUN_FILES)


# ---------------------------------------------------------------------------
# Run directory
# ---------------------------------------------------------------------------


def test_run_directory_has_all_files(toy_run_dir):
    assert missing_files(toy_run_dir) == []


def test_summary_contents(toy_run_dir, toy_solution):
    summary = load_summary(toy_run_dir)

    assert summary["schema_version"] == SCHEMA_VERSION
    assert summary["scenario"] == "toy_3bus_2node"
    assert summary["status"] == "optimal"
    assert summary["counts"]["variables"] == 132
    assert summary["units"] == [1, 2]
    assert summary["feas_tol"] == 1e-6
    assert summary["total"] == pytest.approx(toy_solution.costs.total)
    assert summary["tightness"]["loose"] == len(toy_solution.tightness.loose)


def test_costs_csv_sums_to_total(toy_run_dir):
    costs = load_table(toy_run_dir, "costs.csv")
    total = load_summary(toy_run_dir)["total"]

    assert costs["term"].tolist() == [
        "fuel", "start", "stop", "gas", "curtail", "truck", "coal_revenue", "slack",
    ]
    assert costs["value"].sum() == pytest.approx(total, rel=1e-8)
    assert costs.set_index("term").loc["coal_revenue", "value"] <= 0


def test_table_shapes(toy_run_dir):
    units = load_table(toy_run_dir, "unit_output.csv")
    gas = load_table(toy_run_dir, "gas_state.csv")
    coupling = load_table(toy_run_dir, "coupling.csv")
    tightness = load_table(toy_run_dir, "tightness.csv")

    assert len(units) == 2 * 4
    assert (units["P_mw"] == pytest.approx(units["P"] * 100.0)).all()
    assert (gas["element"] == "node").sum() == 2 * 4
    assert (gas["element"] == "pipe").sum() == 4
    assert len(coupling) == 4
    assert list(tightness.columns)[-2:] == ["residual", "relative"]


def test_report_is_reproducible(tmp_path, toy_solution):
    report(toy_solution, tmp_path / "a")
    report(toy_solution, tmp_path / "b")

    for name in RUN_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_clean_values():
    assert _clean(math.nan) is None
    assert _clean(math.inf) is None
    assert math.copysign(1.0, _clean(-0.0)) == 1.0


def test_summary_without_feas_tol(toy_solution):
    data = summary_dict(toy_solution)
    assert "feas_tol" not in data
    json.dumps(data, allow_nan=False)


def test_write_sweep(tmp_path):
    table = pd.DataFrame({"rho": [0.05, 0.1], "status": ["optimal", "infeasible"], "total": [1.0, math.nan]})
    path = write_sweep(table, tmp_path / "sweep", "reserve_sweep.csv")

    back = pd.read_csv(path)
    assert back["status"].tolist() == ["optimal", "infeasible"]
    assert math.isnan(back["total"].iloc[1])
