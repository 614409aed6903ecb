"""
Search limits: pure check logic after each branch-and-bound node.

No I/O. Used by branch_and_bound to stop a search with an honest status.
"""

import time
from dataclasses import dataclass, replace
from typing import Any

from ies.exceptions import SearchLimitExceeded


@dataclass(frozen=True)
class SearchLimits:
    """Optional search limits; None means disabled."""

    max_nodes: int | None = None
    time_limit_s: float | None = None


def merge_search_limits(base: SearchLimits, **overrides: Any) -> SearchLimits:
    """Return a new SearchLimits with overrides applied. None overrides are ignored."""
    out = base
    if overrides.get("max_nodes") is not None:
        try:
            n = int(overrides["max_nodes"])
            if n >= 0:
                out = replace(out, max_nodes=n)
        except (TypeError, ValueError):
            pass
    if overrides.get("time_limit_s") is not None:
        try:
            out = replace(out, time_limit_s=max(0.0, float(overrides["time_limit_s"])))
        except (TypeError, ValueError):
            pass
    return out


def check_search_limits(
    nodes: int,
    started_at: float,
    limits: SearchLimits,
    *,
    now: float | None = None,
) -> None:
    """
    Raise SearchLimitExceeded when a limit is reached.

    Call after a node has been evaluated so that max_nodes=50 stops the search
    once 50 nodes are explored.

    Args:
        nodes: Nodes evaluated so far (including the current one).
        started_at: Search start, in ``time.monotonic()`` seconds.
        limits: Limits from config or options.
        now: Optional current time for deterministic tests (default: monotonic clock).
    """
    if limits.max_nodes is not None and nodes >= limits.max_nodes:
        raise SearchLimitExceeded(
            limit="max_nodes",
            threshold=limits.max_nodes,
            actual=nodes,
            message=f"search limit max_nodes: {nodes} >= {limits.max_nodes}",
        )

    if limits.time_limit_s is not None:
        current = now if now is not None else time.monotonic()
        elapsed_s = current - started_at
        if elapsed_s >= limits.time_limit_s:
            raise SearchLimitExceeded(
                limit="time_limit_s",
                threshold=limits.time_limit_s,
                actual=elapsed_s,
                message=(
                    f"search limit time_limit_s: elapsed {elapsed_s:.1f}s "
                    f">= {limits.time_limit_s}s"
                ),
            )
