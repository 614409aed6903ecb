"""Invariant checks over an emitted run directory, result aggregation, and report formatting.

``run_checks`` reads only the files written by ``ies.report`` (no solver
state), so a run can be audited long after it was produced. Each check yields a
``CheckResult``; results are collected into a ``CheckReport`` with an overall
pass/fail.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ies.constants import H2_PER_CH4
from ies.storage import (
    COSTS_CSV,
    COUPLING_CSV,
    UNIT_OUTPUT_CSV,
    load_summary,
    load_table,
    missing_files,
)

kDefaultTolerance = 1e-5  # relative, scaled by max(1, |value|)
kDefaultTotalTolerance = 0.05


@dataclass
class CheckPolicy:
    """Thresholds for ``ies check``.

    Note: tolerances are fractional, not percentage.
    """

    tol: float = kDefaultTolerance

    # Relative optimality gap reported by the solver
    max_gap: float | None = None

    # Largest relative Weymouth residual in tightness.csv
    max_tightness: float | None = None

    # Total cost cap, alone or against a baseline run
    max_total: float | None = None
    total_tolerance: float = kDefaultTotalTolerance

    expect_status: str | None = None  # e.g. optimal


@dataclass
class CheckResult:
    """Result of a single check."""

    check_name: str
    passed: bool
    message: str
    expected: str | None = None
    actual: str | None = None


@dataclass
class CheckReport:
    run_dir: str
    baseline_dir: str | None
    results: list[CheckResult] = field(default_factory=list)
    passed: bool = True

    def add(self, result: CheckResult) -> None:
        self.results.append(result)
        if not result.passed:
            self.passed = False


def _scaled(values: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, np.abs(values))


def _residual_check(
    check_name: str, residual: np.ndarray, scale: np.ndarray, tol: float, what: str
) -> CheckResult:
    """Pass when every |residual| ≤ tol·max(1, |scale|)."""
    residual = np.abs(np.asarray(residual, dtype=float))
    if residual.size == 0:
        return CheckResult(check_name, True, f"{what}: nothing to check")
    relative = residual / _scaled(np.asarray(scale, dtype=float))
    worst = int(np.argmax(relative))
    passed = bool(relative[worst] <= tol)
    message = f"{what} holds (max relative residual {relative[worst]:.3g})"
    if not passed:
        message = f"{what} violated at row {worst} (relative residual {relative[worst]:.3g})"
    return CheckResult(check_name, passed, message, expected=f"<= {tol:g}", actual=f"{relative[worst]:.3g}")


def _check_threshold(
    actual: float,
    baseline_value: float | None,
    tolerance: float,
    standalone_max: float | None,
    check_name: str,
    unit: str,
) -> CheckResult | None:
    """Shared cap/baseline comparison. Returns None if neither is set."""
    if baseline_value is None and standalone_max is None:
        return None
    limits = []
    parts = []
    if baseline_value is not None:
        limits.append(baseline_value + tolerance * max(1.0, abs(baseline_value)))
        parts.append(f"baseline: {baseline_value:.6g}, tolerance: {tolerance:.0%}")
    if standalone_max is not None:
        limits.append(float(standalone_max))
        parts.append(f"max: {standalone_max:g}")
    limit = min(limits)
    return CheckResult(
        check_name=check_name,
        passed=actual <= limit,
        message=f"{actual:.6g} {unit} ({', '.join(parts)})",
        expected=f"<= {limit:.6g}",
        actual=f"{actual:.6g}",
    )


def _coupling_checks(report: CheckReport, coupling: pd.DataFrame, tol: float) -> None:
    c = coupling
    report.add(
        _residual_check(
            "curtailment",
            np.minimum(0.0, c["curtailment"]) + (c["availability"] - c["Pw"] - c["curtailment"]),
            c["availability"],
            tol,
            "curtailment = availability − Pw ≥ 0",
        )
    )
    report.add(
        _residual_check(
            "stoichiometry",
            c["f_h2_prime"] - H2_PER_CH4 * c["f_ch4"],
            c["f_h2_prime"],
            tol,
            "f_h2_prime = 4·f_ch4",
        )
    )
    supply = c["f_h2"] + c["f_coal_h2"] + c["h2_short"] - c["h2_surplus"]
    report.add(
        _residual_check("hydrogen_balance", supply - c["f_truck_h2"], c["f_truck_h2"], tol, "hydrogen balance")
    )
    below = np.minimum(0.0, c["beta"])
    above = np.maximum(0.0, c["beta"] - 1.0)
    report.add(_residual_check("beta_range", below + above, np.ones(len(c)), tol, "β in [0, 1]"))
    report.add(
        _residual_check(
            "coal_conservation",
            c["gasified"] + c["trucked"] - c["mined"],
            c["mined"],
            tol,
            "gasified + trucked = mined",
        )
    )


def _unit_checks(report: CheckReport, units: pd.DataFrame, summary: dict[str, Any]) -> None:
    expected = len(summary.get("units", [])) * int(summary.get("horizon", 0))
    report.add(
        CheckResult(
            check_name="unit_output_shape",
            passed=len(units) == expected,
            message=f"{len(units)} unit-slot rows",
            expected=str(expected),
            actual=str(len(units)),
        )
    )
    stray = units[(units["u"] == 0) & (units["P"] != 0.0)]
    report.add(
        CheckResult(
            check_name="commitment_gating",
            passed=stray.empty,
            message=(
                "output is zero wherever the unit is off"
                if stray.empty
                else f"{len(stray)} off unit-slot(s) with nonzero output"
            ),
            actual=str(len(stray)),
        )
    )


def run_checks(
    run_dir: Path | str,
    policy: CheckPolicy | None = None,
    baseline_dir: Path | str | None = None,
) -> CheckReport:
    """Run every invariant check plus the thresholds enabled in ``policy``.

    Raises FileNotFoundError when summary.json is missing.
    """
    policy = policy or CheckPolicy()
    run_dir = Path(run_dir)
    summary = load_summary(run_dir)
    baseline = load_summary(baseline_dir) if baseline_dir is not None else None
    report = CheckReport(run_dir=str(run_dir), baseline_dir=str(baseline_dir) if baseline_dir else None)

    missing = missing_files(run_dir)
    report.add(
        CheckResult(
            check_name="files_present",
            passed=not missing,
            message="all run files present" if not missing else f"missing: {', '.join(missing)}",
            actual=", ".join(missing) or "none",
        )
    )
    if missing:
        return report

    total = summary.get("total")
    costs = load_table(run_dir, COSTS_CSV)
    csv_sum = float(costs["value"].sum())
    report.add(
        _residual_check(
            "cost_additivity", np.array([csv_sum - (total or 0.0)]), np.array([total or 0.0]), policy.tol,
            "costs.csv sums to summary total",
        )
    )
    _unit_checks(report, load_table(run_dir, UNIT_OUTPUT_CSV), summary)
    _coupling_checks(report, load_table(run_dir, COUPLING_CSV), policy.tol)

    if policy.max_gap is not None:
        gap = summary.get("gap")
        gap = float("inf") if gap is None else float(gap)
        report.add(
            CheckResult(
                check_name="gap",
                passed=gap <= policy.max_gap,
                message=f"relative gap {gap:.3g} (max: {policy.max_gap:g})",
                expected=f"<= {policy.max_gap:g}",
                actual=f"{gap:.3g}",
            )
        )

    if policy.max_tightness is not None:
        worst = summary.get("tightness", {}).get("max_relative") or 0.0
        report.add(
            CheckResult(
                check_name="weymouth_tightness",
                passed=worst <= policy.max_tightness,
                message=f"max relative Weymouth residual {worst:.3g} (max: {policy.max_tightness:g})",
                expected=f"<= {policy.max_tightness:g}",
                actual=f"{worst:.3g}",
            )
        )

    r = _check_threshold(
        actual=float(total if total is not None else float("inf")),
        baseline_value=(baseline or {}).get("total"),
        tolerance=policy.total_tolerance,
        standalone_max=policy.max_total,
        check_name="total_cost",
        unit="$",
    )
    if r:
        report.add(r)

    if policy.expect_status is not None:
        actual_status = summary.get("status", "")
        passed = actual_status == policy.expect_status
        report.add(
            CheckResult(
                check_name="expect_status",
                passed=passed,
                message=(
                    f"status is '{actual_status}'"
                    if passed
                    else f"expected '{policy.expect_status}', got '{actual_status}'"
                ),
                expected=policy.expect_status,
                actual=actual_status,
            )
        )

    return report


# ---------------------------------------------------------------------------
# Report formatters
# ---------------------------------------------------------------------------

_PASS = "\u2713"  # ✓
_FAIL = "\u2717"  # ✗


def format_report_text(report: CheckReport) -> str:
    """Format report as human-readable text for CLI output."""
    lines: list[str] = []
    for r in report.results:
        mark = _PASS if r.passed else _FAIL
        lines.append(f"  {mark} {r.check_name}: {r.message}")
    total = len(report.results)
    failed = sum(1 for r in report.results if not r.passed)
    verdict = "PASSED" if report.passed else "FAILED"
    lines.append("")
    if failed:
        lines.append(f"RESULT: {verdict} ({failed} of {total} checks failed)")
    else:
        lines.append(f"RESULT: {verdict} ({total} checks passed)")
    return "\n".join(lines)


def format_report_json(report: CheckReport) -> str:
    data: dict[str, Any] = {
        "run_dir": report.run_dir,
        "baseline_dir": report.baseline_dir,
        "passed": report.passed,
        "results": [
            {
                "check_name": r.check_name,
                "passed": r.passed,
                "message": r.message,
                "expected": r.expected,
                "actual": r.actual,
            }
            for r in report.results
        ],
    }
    return json.dumps(data, ensure_ascii=False, indent=2)


def format_report_markdown(report: CheckReport) -> str:
    """Format report as Markdown for PR comments."""
    lines: list[str] = [
        "## ies Check Report",
        "",
        "| Check | Status | Details |",
        "|-------|--------|---------|",
    ]
    for r in report.results:
        icon = "\u2705 Pass" if r.passed else "\u274c Fail"
        lines.append(f"| {r.check_name} | {icon} | {r.message} |")
    lines.append("")
    verdict = "**PASSED**" if report.passed else "**FAILED**"
    lines.append(f"Result: {verdict}")
    return "\n".join(lines)
