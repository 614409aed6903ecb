"""Tests for ies.checks: invariant checks over a run directory and report formatting."""

import json
import shutil

import pandas as pd
import pytest

from ies.checks import (
    CheckPolicy,
    CheckReport,
    CheckResult,
    format_report_json,
    format_report_markdown,
    format_report_text,
    run_checks,
)
from ies.storage import atomic_write_json, load_summary, write_table


@pytest.fixture
def run_copy(tmp_path, toy_run_dir):
    """A writable copy of the toy run directory."""
    dest = tmp_path / "run"
    shutil.copytree(toy_run_dir, dest)
    return dest


def _names(report: CheckReport, passed: bool) -> list[str]:
    return [r.check_name for r in report.results if r.passed is passed]


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------


def test_toy_run_passes_every_invariant(toy_run_dir):
    report = run_checks(toy_run_dir)

    assert report.passed, format_report_text(report)
    assert _names(report, True) == [
        "files_present",
        "cost_additivity",
        "unit_output_shape",
        "commitment_gating",
        "curtailment",
        "stoichiometry",
        "hydrogen_balance",
        "beta_range",
        "coal_conservation",
    ]


def test_missing_file_stops_early(run_copy):
    (run_copy / "coupling.csv").unlink()
    report = run_checks(run_copy)

    assert not report.passed
    assert len(report.results) == 1
    assert "coupling.csv" in report.results[0].message


def test_missing_summary_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        run_checks(tmp_path)


def test_edited_total_breaks_additivity(run_copy):
    summary = load_summary(run_copy)
    summary["total"] += 1000.0
    atomic_write_json(run_copy / "summary.json", summary)

    assert _names(run_checks(run_copy), False) == ["cost_additivity"]


def test_output_while_off_is_flagged(run_copy):
    units = pd.read_csv(run_copy / "unit_output.csv")
    units.loc[0, ["u", "P"]] = [0, 0.5]
    write_table(units, run_copy / "unit_output.csv")

    report = run_checks(run_copy)
    assert _names(report, False) == ["commitment_gating"]


def test_broken_coal_conservation(run_copy):
    coupling = pd.read_csv(run_copy / "coupling.csv")
    coupling.loc[2, "trucked"] += 5.0
    write_table(coupling, run_copy / "coupling.csv")

    assert _names(run_checks(run_copy), False) == ["coal_conservation"]


def test_beta_out_of_range(run_copy):
    coupling = pd.read_csv(run_copy / "coupling.csv")
    coupling.loc[0, "beta"] = 1.2
    write_table(coupling, run_copy / "coupling.csv")

    assert "beta_range" in _names(run_checks(run_copy), False)


# ---------------------------------------------------------------------------
# Policy thresholds
# ---------------------------------------------------------------------------


def test_thresholds_that_hold(toy_run_dir):
    policy = CheckPolicy(max_gap=1e-3, max_tightness=1.0, expect_status="optimal")
    report = run_checks(toy_run_dir, policy)

    assert report.passed
    assert {"gap", "weymouth_tightness", "expect_status"} <= set(_names(report, True))


def test_total_cap_and_status_failures(toy_run_dir):
    report = run_checks(toy_run_dir, CheckPolicy(max_total=1.0, expect_status="infeasible"))

    assert _names(report, False) == ["total_cost", "expect_status"]
    assert "expected 'infeasible', got 'optimal'" in report.results[-1].message


def test_baseline_comparison(run_copy, toy_run_dir):
    assert run_checks(run_copy, baseline_dir=toy_run_dir).passed

    summary = load_summary(toy_run_dir)
    baseline = run_copy.parent / "baseline"
    shutil.copytree(toy_run_dir, baseline)
    summary["total"] = summary["total"] / 2.0 if summary["total"] > 0 else summary["total"] - 1e6
    atomic_write_json(baseline / "summary.json", summary)

    report = run_checks(run_copy, CheckPolicy(total_tolerance=0.05), baseline_dir=baseline)
    assert _names(report, False) == ["total_cost"]


# ---------------------------------------------------------------------------
# Formatters
# ---------------------------------------------------------------------------


def _report() -> CheckReport:
    report = CheckReport(run_dir="runs/a", baseline_dir=None)
    report.add(CheckResult("gap", True, "relative gap 1e-05"))
    report.add(CheckResult("total_cost", False, "2e+05 $ (max: 1)", expected="<= 1", actual="2e+05"))
    return report


def test_format_text():
    text = format_report_text(_report())

    assert "  ✓ gap: relative gap 1e-05" in text
    assert "  ✗ total_cost" in text
    assert text.endswith("RESULT: FAILED (1 of 2 checks failed)")


def test_format_text_all_passed():
    report = CheckReport(run_dir="r", baseline_dir=None)
    report.add(CheckResult("gap", True, "ok"))
    assert format_report_text(report).endswith("RESULT: PASSED (1 checks passed)")


def test_format_json():
    data = json.loads(format_report_json(_report()))

    assert data["passed"] is False
    assert data["results"][1]["expected"] == "<= 1"


def test_format_markdown():
    md = format_report_markdown(_report())

    assert md.startswith("## ies Check Report")
    assert "| total_cost | ❌ Fail |" in md
    assert md.endswith("Result: **FAILED**")
