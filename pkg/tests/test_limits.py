"""Tests for ies.limits: search limit checks and merging."""

import pytest

from ies.exceptions import SearchLimitExceeded
from ies.limits import SearchLimits, check_search_limits, merge_search_limits


def test_no_limits_never_raise():
    check_search_limits(10_000, 0.0, SearchLimits(), now=1e9)


def test_max_nodes_fires_at_threshold():
    limits = SearchLimits(max_nodes=50)
    check_search_limits(49, 0.0, limits, now=0.0)
    with pytest.raises(SearchLimitExceeded) as info:
        check_search_limits(50, 0.0, limits, now=0.0)
    assert info.value.limit == "max_nodes"
    assert info.value.threshold == 50
    assert info.value.actual == 50


def test_time_limit_uses_injected_clock():
    limits = SearchLimits(time_limit_s=2.0)
    check_search_limits(1, 10.0, limits, now=11.5)
    with pytest.raises(SearchLimitExceeded) as info:
        check_search_limits(1, 10.0, limits, now=12.0)
    assert info.value.limit == "time_limit_s"
    assert info.value.actual == pytest.approx(2.0)


def test_merge_ignores_none_and_invalid():
    base = SearchLimits(max_nodes=10, time_limit_s=5.0)

    assert merge_search_limits(base, max_nodes=None, time_limit_s=None) == base
    assert merge_search_limits(base, max_nodes="x") == base
    assert merge_search_limits(base, max_nodes=-3) == base


def test_merge_applies_overrides():
    merged = merge_search_limits(SearchLimits(), max_nodes="25", time_limit_s=-1)

    assert merged.max_nodes == 25
    assert merged.time_limit_s == 0.0
