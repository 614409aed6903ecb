"""
CLI tests using Typer CliRunner.
Solving commands write into tmp_path; audit commands read the shared toy run.
Covers: run, sweep, report, validate, check, diff, oracle and exit codes.
"""

import json

import pytest
from typer.testing import CliRunner

from ies.cli import (
    EXIT_CHECK_FAILED,
    EXIT_INFEASIBLE,
    EXIT_INPUT,
    EXIT_INTERNAL,
    EXIT_LIMIT,
    EXIT_OK,
    app,
    exit_code_for,
)
from ies.scenario import bundled_fixture
from ies.storage import RUN_FILES

runner = CliRunner()


def _toy_variant(tmp_path, edit, name="variant.json"):
    """Write a copy of the toy scenario after edit(data) has changed it in place."""
    data = json.loads(bundled_fixture("toy_3bus_2node").read_text())
    edit(data)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert result.output.startswith("ies ")


@pytest.mark.parametrize(
    "status,code",
    [
        ("optimal", EXIT_OK),
        ("gap-limit", EXIT_LIMIT),
        ("node-limit", EXIT_LIMIT),
        ("time-limit", EXIT_LIMIT),
        ("infeasible", EXIT_INFEASIBLE),
        ("mystery", EXIT_INTERNAL),
    ],
)
def test_exit_code_for(status, code):
    assert exit_code_for(status) == code


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def test_validate_bundled_fixture():
    result = runner.invoke(app, ["validate", "toy_3bus_2node"])
    assert result.exit_code == 0
    assert "toy_3bus_2node: valid (T=4)" in result.output
    assert "variables: 132" in result.output


def test_validate_without_p2g():
    result = runner.invoke(app, ["validate", "toy_3bus_2node", "--no-p2g"])
    assert result.exit_code == 0
    assert "variables: 112" in result.output


def test_validate_unknown_fixture():
    result = runner.invoke(app, ["validate", "no_such_fixture"])
    assert result.exit_code == EXIT_INPUT


def test_validate_broken_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    result = runner.invoke(app, ["validate", str(path)])
    assert result.exit_code == EXIT_INPUT


def test_validate_invalid_scenario(tmp_path):
    path = _toy_variant(tmp_path, lambda d: d["power"].update(reserve_rho=1.5))
    result = runner.invoke(app, ["validate", str(path)])
    assert result.exit_code == EXIT_INPUT


def test_validate_non_object_unit_is_an_input_error(tmp_path):
    path = _toy_variant(tmp_path, lambda d: d.update(units=[1]))
    result = runner.invoke(app, ["validate", str(path)])
    assert result.exit_code == EXIT_INPUT


def test_run_rejects_malformed_series(tmp_path):
    result = runner.invoke(app, ["run", "toy_3bus_2node", "--series", "wind.availability", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_INPUT


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_writes_report(tmp_path):
    out = tmp_path / "run"
    program = tmp_path / "toy.prog"
    result = runner.invoke(app, ["run", "toy_3bus_2node", "--out", str(out), "--dump-program", str(program)])

    assert result.exit_code == 0, result.output
    assert "optimal: total" in result.output
    assert (out / "summary.json").is_file()
    assert program.read_text().startswith("# ies conic program")


@pytest.mark.slow
def test_two_runs_write_identical_files(tmp_path):
    for name in ("a", "b"):
        result = runner.invoke(app, ["run", "toy_3bus_2node", "--out", str(tmp_path / name)])
        assert result.exit_code == 0, result.output

    for name in RUN_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_infeasible_exit_code(tmp_path):
    path = _toy_variant(tmp_path, lambda d: d["loads"].update({"2": [5.0, 5.0, 5.0, 5.0]}))
    result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path / "run")])
    assert result.exit_code == EXIT_INFEASIBLE


def test_run_missing_day_profile(tmp_path):
    result = runner.invoke(app, ["run", "toy_3bus_2node", "--day", "winter", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_INPUT


def test_run_bad_gap(tmp_path):
    result = runner.invoke(app, ["run", "toy_3bus_2node", "--gap", "-1", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_INPUT


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def test_sweep_rejects_unknown_param(tmp_path):
    result = runner.invoke(app, ["sweep", "toy_3bus_2node", "--param", "alpha", "--values", "1", "-o", str(tmp_path)])
    assert result.exit_code == EXIT_INPUT


def test_sweep_rejects_bad_values(tmp_path):
    result = runner.invoke(app, ["sweep", "toy_3bus_2node", "--param", "rho", "--values", "a,b", "-o", str(tmp_path)])
    assert result.exit_code == EXIT_INPUT


@pytest.mark.slow
def test_reserve_sweep_reports_failed_points(tmp_path):
    result = runner.invoke(
        app, ["sweep", "toy_3bus_2node", "--param", "rho", "--values", "0.05,1.5", "-o", str(tmp_path)]
    )
    assert result.exit_code == EXIT_LIMIT
    assert (tmp_path / "sweep_rho.csv").is_file()


# ---------------------------------------------------------------------------
# report / check / diff
# ---------------------------------------------------------------------------


def test_report_text(toy_run_dir):
    result = runner.invoke(app, ["report", str(toy_run_dir)])
    assert result.exit_code == 0
    assert result.output.startswith("toy_3bus_2node: optimal")
    assert "coal_revenue" in result.output
    assert "total" in result.output


def test_report_json(toy_run_dir):
    result = runner.invoke(app, ["report", str(toy_run_dir), "--format", "json"])
    assert result.exit_code == 0
    assert json.loads(result.output)["counts"]["variables"] == 132


def test_report_missing_run(tmp_path):
    result = runner.invoke(app, ["report", str(tmp_path / "nope")])
    assert result.exit_code == EXIT_INPUT


def test_check_passes(toy_run_dir):
    result = runner.invoke(app, ["check", str(toy_run_dir)])
    assert result.exit_code == 0
    assert "RESULT: PASSED" in result.output


def test_check_fails_on_total_cap(toy_run_dir):
    result = runner.invoke(app, ["check", str(toy_run_dir), "--max-total", "1"])
    assert result.exit_code == EXIT_CHECK_FAILED
    assert "✗ total_cost" in result.output


def test_check_policy_file_and_override(toy_run_dir, tmp_path):
    policy = tmp_path / "policy.yaml"
    policy.write_text("check:\n  expect_status: infeasible\n")

    failed = runner.invoke(app, ["check", str(toy_run_dir), "--policy", str(policy)])
    assert failed.exit_code == EXIT_CHECK_FAILED
    passed = runner.invoke(
        app, ["check", str(toy_run_dir), "--policy", str(policy), "--expect-status", "optimal"]
    )
    assert passed.exit_code == 0


def test_check_json_and_markdown(toy_run_dir):
    as_json = runner.invoke(app, ["check", str(toy_run_dir), "--format", "json"])
    assert json.loads(as_json.output)["passed"] is True

    as_md = runner.invoke(app, ["check", str(toy_run_dir), "--format", "markdown"])
    assert as_md.output.startswith("## ies Check Report")


def test_check_missing_run(tmp_path):
    result = runner.invoke(app, ["check", str(tmp_path)])
    assert result.exit_code == EXIT_INPUT


def test_diff_same_run(toy_run_dir):
    result = runner.invoke(app, ["diff", str(toy_run_dir), str(toy_run_dir)])
    assert result.exit_code == 0
    assert "Costs: identical" in result.output


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


def test_oracle_mccormick():
    result = runner.invoke(app, ["oracle", "mccormick", "--x", "1", "--pi-m", "10", "--pi-n", "4"])
    assert result.exit_code == 0
    assert "lambda_min = 6" in result.output


def test_oracle_gas_on_toy():
    result = runner.invoke(app, ["oracle", "gas", "toy_3bus_2node", "--slot", "0"])
    assert result.exit_code == 0
    assert result.output.startswith("optimal")
    assert "node 1" in result.output


def test_oracle_errors():
    assert runner.invoke(app, ["oracle", "uc", "toy_3bus_2node"]).exit_code == EXIT_INPUT
    assert runner.invoke(app, ["oracle", "lp"]).exit_code == EXIT_INPUT
    assert runner.invoke(app, ["oracle", "gas"]).exit_code == EXIT_INPUT
    assert runner.invoke(app, ["oracle", "gas", "toy_3bus_2node", "--slot", "9"]).exit_code == EXIT_INPUT
