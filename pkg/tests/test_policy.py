"""Tests for ies.policy: YAML loading and CLI merge."""

import pytest

from ies.checks import CheckPolicy
from ies.policy import load_policy, merge_policy

# ---------------------------------------------------------------------------
# load_policy
# ---------------------------------------------------------------------------


def test_load_policy_valid_yaml(tmp_path):
    p = tmp_path / "policy.yaml"
    p.write_text(
        "check:\n"
        "  tol: 1.0e-6\n"
        "  max_gap: 1.0e-3\n"
        "  expect_status: optimal\n"
    )
    policy = load_policy(p)
    assert policy.tol == 1e-6
    assert policy.max_gap == 1e-3
    assert policy.expect_status == "optimal"
    assert policy.max_total is None


def test_load_policy_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_policy(tmp_path / "nonexistent.yaml")


def test_load_policy_ignores_unknown_keys(tmp_path):
    p = tmp_path / "policy.yaml"
    p.write_text("check:\n  extra_unknown_key: 42\n")
    assert load_policy(p) == CheckPolicy()


def test_load_policy_no_check_section(tmp_path):
    p = tmp_path / "policy.yaml"
    p.write_text("other:\n  key: value\n")
    assert load_policy(p) == CheckPolicy()


def test_load_policy_all_fields(tmp_path):
    p = tmp_path / "policy.yaml"
    p.write_text(
        "check:\n"
        "  tol: 1.0e-4\n"
        "  max_gap: 0.01\n"
        "  max_tightness: 1.0e-3\n"
        "  max_total: 250000\n"
        "  total_tolerance: 0.1\n"
        "  expect_status: gap-limit\n"
    )
    policy = load_policy(p)
    assert policy == CheckPolicy(
        tol=1e-4,
        max_gap=0.01,
        max_tightness=1e-3,
        max_total=250000,
        total_tolerance=0.1,
        expect_status="gap-limit",
    )


# ---------------------------------------------------------------------------
# merge_policy
# ---------------------------------------------------------------------------


def test_merge_cli_overrides_win():
    file_policy = CheckPolicy(max_gap=1e-3, max_total=100.0)
    merged = merge_policy(file_policy, {"max_gap": 1e-2, "max_total": None})
    assert merged.max_gap == 1e-2
    assert merged.max_total == 100.0


def test_merge_ignores_unknown_keys():
    merged = merge_policy(CheckPolicy(), {"no_such_field": 1, "expect_status": "optimal"})
    assert merged.expect_status == "optimal"


def test_merge_returns_new_policy():
    file_policy = CheckPolicy(tol=1e-5)
    merged = merge_policy(file_policy, {"tol": 1e-3})
    assert file_policy.tol == 1e-5
    assert merged.tol == 1e-3
