"""Compare two run directories term by term.

Used after ``ies check`` flags a cost regression, or to read off what a variant
(no P2G, another ρ or δ) changed against the reference run.
"""

from dataclasses import dataclass, field
from pathlib import Path

from ies.runner import COST_TERMS
from ies.storage import load_summary

_SCALARS = ("status", "total", "gap", "nodes", "curtailed_kwh", "with_p2g", "fleet", "delta_wp", "rho")


@dataclass
class RunDiff:
    """Comparison of run A against run B (B is the reference)."""

    run_a: str
    run_b: str
    cost_diff: dict[str, tuple[float, float]] = field(default_factory=dict)
    summary_diff: dict = field(default_factory=dict)
    count_diff: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def identical(self) -> bool:
        return not (self.cost_diff or self.summary_diff or self.count_diff)


def _changed(a, b, tol: float) -> bool:
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        return abs(a - b) > tol * max(1.0, abs(b))
    return a != b


def compute_diff(run_a: Path | str, run_b: Path | str, tol: float = 1e-9) -> RunDiff:
    """Diff summary.json of two runs. Numeric values within ``tol`` (relative) count as equal."""
    sum_a = load_summary(run_a)
    sum_b = load_summary(run_b)
    diff = RunDiff(run_a=str(run_a), run_b=str(run_b))

    costs_a = sum_a.get("costs", {})
    costs_b = sum_b.get("costs", {})
    for term in COST_TERMS:
        va = costs_a.get(term) or 0.0
        vb = costs_b.get(term) or 0.0
        if _changed(va, vb, tol):
            diff.cost_diff[term] = (va, vb)

    for key in _SCALARS:
        va, vb = sum_a.get(key), sum_b.get(key)
        if va is None and vb is None:
            continue
        if va is None or vb is None or _changed(va, vb, tol):
            diff.summary_diff[key] = (va, vb)

    counts_a = sum_a.get("counts", {})
    counts_b = sum_b.get("counts", {})
    for key in sorted(set(counts_a) | set(counts_b)):
        ca, cb = counts_a.get(key, 0), counts_b.get(key, 0)
        if ca != cb:
            diff.count_diff[key] = (ca, cb)
    return diff


# ---------------------------------------------------------------------------
# Formatters
# ---------------------------------------------------------------------------


def _pct_change(a: int | float, b: int | float) -> str:
    """Human-readable percentage change string."""
    if b == 0:
        return "NEW" if a else "unchanged"
    delta = ((a - b) / abs(b)) * 100
    if delta == 0:
        return "unchanged"
    return f"{delta:+.1f}%"


def format_diff_text(diff: RunDiff) -> str:
    """Format a ``RunDiff`` as human-readable text (B -> A)."""
    lines: list[str] = [f"Run comparison: {diff.run_a} vs {diff.run_b}"]

    lines.append("")
    if diff.cost_diff:
        lines.append("Costs:")
        for term in COST_TERMS:
            if term in diff.cost_diff:
                va, vb = diff.cost_diff[term]
                lines.append(f"  {term}: {vb:.6g} -> {va:.6g} ({_pct_change(va, vb)})")
    else:
        lines.append("Costs: identical")

    if diff.summary_diff:
        lines.append("")
        lines.append("Summary:")
        for key, (va, vb) in diff.summary_diff.items():
            if isinstance(va, (int, float)) and isinstance(vb, (int, float)) and not isinstance(va, bool):
                lines.append(f"  {key}: {vb} -> {va} ({_pct_change(va, vb)})")
            else:
                lines.append(f"  {key}: {vb} -> {va}")

    if diff.count_diff:
        lines.append("")
        lines.append("Program size:")
        for key, (ca, cb) in diff.count_diff.items():
            lines.append(f"  {key}: {cb} -> {ca}")
    return "\n".join(lines)
