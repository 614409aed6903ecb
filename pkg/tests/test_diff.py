"""Tests for ies.diff: term-by-term run comparison."""

import shutil

import pytest

from ies.diff import RunDiff, _pct_change, compute_diff, format_diff_text
from ies.storage import atomic_write_json, load_summary


def _variant(tmp_path, source, name, **changes):
    """Copy a run directory and edit its summary.json."""
    dest = tmp_path / name
    shutil.copytree(source, dest)
    summary = load_summary(dest)
    for key, value in changes.items():
        if key in summary.get("costs", {}):
            summary["costs"][key] = value
        else:
            summary[key] = value
    atomic_write_json(dest / "summary.json", summary)
    return dest


def test_identical_runs(toy_run_dir):
    d = compute_diff(toy_run_dir, toy_run_dir)

    assert d.identical
    assert "Costs: identical" in format_diff_text(d)


def test_cost_and_summary_changes(tmp_path, toy_run_dir):
    base = load_summary(toy_run_dir)
    variant = _variant(
        tmp_path, toy_run_dir, "no_p2g", with_p2g=False, curtail=base["costs"]["curtail"] + 500.0,
        total=base["total"] + 500.0,
    )
    d = compute_diff(variant, toy_run_dir)

    assert set(d.cost_diff) == {"curtail"}
    assert d.cost_diff["curtail"][0] - d.cost_diff["curtail"][1] == pytest.approx(500.0)
    assert set(d.summary_diff) == {"total", "with_p2g"}
    assert d.summary_diff["with_p2g"] == (False, True)
    text = format_diff_text(d)
    assert "curtail:" in text
    assert "with_p2g: True -> False" in text


def test_count_changes(tmp_path, toy_run_dir):
    counts = dict(load_summary(toy_run_dir)["counts"], variables=112, linear=144)
    variant = _variant(tmp_path, toy_run_dir, "smaller", counts=counts)
    d = compute_diff(variant, toy_run_dir)

    assert d.count_diff == {"linear": (144, 156), "variables": (112, 132)}
    assert "variables: 132 -> 112" in format_diff_text(d)


def test_tolerance_hides_noise(tmp_path, toy_run_dir):
    total = load_summary(toy_run_dir)["total"]
    variant = _variant(tmp_path, toy_run_dir, "noise", total=total * (1 + 1e-12))

    assert compute_diff(variant, toy_run_dir).identical
    assert not compute_diff(variant, toy_run_dir, tol=0.0).identical


def test_missing_run(tmp_path, toy_run_dir):
    with pytest.raises(FileNotFoundError):
        compute_diff(tmp_path / "nope", toy_run_dir)


@pytest.mark.parametrize(
    "a,b,expected",
    [(110, 100, "+10.0%"), (90, 100, "-10.0%"), (5, 5, "unchanged"), (3, 0, "NEW"), (0, 0, "unchanged")],
)
def test_pct_change(a, b, expected):
    assert _pct_change(a, b) == expected


def test_empty_diff_is_identical():
    assert RunDiff(run_a="a", run_b="b").identical
