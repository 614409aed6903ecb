"""
End-to-end runner tests on the bundled toy system plus sweep bookkeeping.

The toy is solved once per worker (session fixture ``toy_solution``).
"""

import math

import pandas as pd
import pytest

from ies.exceptions import ModelError, ScenarioError, SolveFailed
from ies.runner import (
    COST_TERMS,
    CostBreakdown,
    P2GComparison,
    RunOptions,
    compare_p2g,
    interior_minimum,
    prepare,
    run,
    sweep_penalty,
    sweep_reserve,
)
from ies.scenario import bundled_fixture, load_scenario
from ies.solver import SolveOptions
from tests.conftest import make_unit, single_bus_scenario

# ---------------------------------------------------------------------------
# Toy solution invariants
# ---------------------------------------------------------------------------


def test_toy_solves_to_optimality(toy_solution):
    sol = toy_solution

    assert sol.status == "optimal"
    assert sol.gap <= 1e-4
    assert sol.counts["variables"] == 132
    assert sol.with_p2g and sol.fleet == "hydrogen"


def test_cost_breakdown_adds_up(toy_solution):
    costs = toy_solution.costs

    assert costs.additivity_residual() <= 1e-6 * max(1.0, abs(costs.total))
    assert costs.total == pytest.approx(toy_solution.objective, rel=1e-6)
    assert [name for name, _ in costs.signed_terms()] == list(COST_TERMS)


def test_commitment_is_binary_and_output_follows_it(toy_solution):
    for row_u, row_p in zip(toy_solution.u, toy_solution.P):
        for on, power in zip(row_u, row_p):
            assert on in (0, 1)
            if not on:
                assert power == 0.0


def test_power_balance_holds(toy, toy_solution):
    sol = toy_solution
    for t in range(sol.horizon):
        p2g_pu = (sol.coupling.cons_h2[t] + sol.coupling.cons_ch4[t]) / sol.kw_per_pu
        supply = sum(row[t] for row in sol.P) + sol.Pw[t] - p2g_pu
        assert supply == pytest.approx(toy.total_load(t), abs=1e-5)


def test_wind_and_curtailment_stay_within_availability(toy_solution):
    sol = toy_solution
    for avail, used, cut in zip(sol.availability, sol.Pw, sol.curtailment):
        assert -1e-9 <= used <= avail + 1e-9
        assert cut == pytest.approx(avail - used, abs=1e-9)
    assert sol.curtailed_kwh >= 0


def test_hydrogen_and_coal_balances(toy_solution):
    c = toy_solution.coupling
    for t in range(toy_solution.horizon):
        assert c.f_h2[t] + c.f_coal_h2[t] == pytest.approx(c.f_truck_h2[t], rel=1e-6, abs=1e-3)
        assert c.gasified[t] + c.trucked[t] == pytest.approx(c.mined[t])
        assert c.f_h2_prime[t] == pytest.approx(4.0 * c.f_ch4[t], rel=1e-6, abs=1e-4)


def test_line_flows_respect_ratings(toy, toy_solution):
    for line, flows in zip(toy.power_net.lines, toy_solution.line_flow):
        for f in flows:
            assert line.p_min - 1e-9 <= f <= line.p_max + 1e-9


def test_tightness_is_measured(toy_solution):
    report = toy_solution.tightness
    assert len(report.entries) == toy_solution.horizon
    assert all(e.relative >= -1e-3 for e in report.entries)


# ---------------------------------------------------------------------------
# Options and failures
# ---------------------------------------------------------------------------


def test_prepare_applies_overrides(toy):
    prepared = prepare(toy, RunOptions(rho=0.2, delta_wp=0.5))
    assert prepared.power_net.reserve_rho == 0.2
    assert prepared.wind.delta_wp == 0.5
    assert toy.power_net.reserve_rho == 0.05


def test_prepare_rejects_missing_day(toy):
    with pytest.raises(ScenarioError):
        prepare(toy, RunOptions(day="winter"))


def test_infeasible_scenario_raises_solve_failed():
    sc = single_bus_scenario([make_unit(p_max=1.0)], loads=(1.5,))
    with pytest.raises(SolveFailed) as info:
        run(sc)
    assert info.value.status == "infeasible"


def test_cost_breakdown_signs():
    costs = CostBreakdown(fuel=10.0, truck=5.0, coal_revenue=3.0, total=12.0)
    assert dict(costs.signed_terms())["coal_revenue"] == -3.0
    assert costs.additivity_residual() == 0.0


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def test_sweep_rejects_bad_grids(toy):
    with pytest.raises(ModelError):
        sweep_penalty(toy, [])
    with pytest.raises(ModelError):
        sweep_penalty(toy, [0.1, -0.1])
    with pytest.raises(ModelError):
        sweep_reserve(toy, [])


def test_reserve_sweep_records_failures():
    sc = single_bus_scenario([make_unit(p_max=1.0, initial_output=0.9)], loads=(0.9, 0.8, 0.9))
    table = sweep_reserve(sc, [0.05, 0.5, 1.0])

    assert list(table.columns) == ["rho", "status", "total", "committed_units", "error"]
    assert table["status"].tolist() == ["optimal", "infeasible", "error"]
    assert table["committed_units"].iloc[0] == 3
    assert math.isnan(table["total"].iloc[1])
    assert "reserve_rho" in table["error"].iloc[2]


def test_penalty_sweep_reprices_curtailment():
    unit = make_unit(p_min=0.0, b=40.0, c=0.0, a=0.0)
    sc = single_bus_scenario([unit], loads=(0.5, 0.5), availability=(0.8, 0.8), rho=0.0)
    table = sweep_penalty(sc, [0.0, 0.08], reference_delta=0.08)

    assert table["status"].tolist() == ["optimal", "optimal"]
    row = table.iloc[0]
    assert row["assessed_total"] == pytest.approx(
        row["decision_total"] + 0.08 * row["curtailed_kwh"]
    )
    assert table["curtailed_kwh"].iloc[0] == pytest.approx(2 * 0.3 * 100_000.0)


def test_interior_minimum():
    table = pd.DataFrame({"delta_wp": [0.0, 0.1, 0.2, 0.3], "assessed_total": [5.0, 3.0, 4.0, 6.0]})
    assert interior_minimum(table) == pytest.approx(0.1)

    edge = pd.DataFrame({"delta_wp": [0.0, 0.1, 0.2], "assessed_total": [1.0, 3.0, 4.0]})
    assert interior_minimum(edge) is None
    tied = pd.DataFrame({"delta_wp": [0.0, 0.1, 0.2, 0.3], "assessed_total": [5.0, 3.0, 3.0, 6.0]})
    assert interior_minimum(tied) is None
    failed = pd.DataFrame({"delta_wp": [0.0, 0.1, 0.2], "assessed_total": [5.0, math.nan, 6.0]})
    assert interior_minimum(failed) is None


def test_p2g_comparison_math():
    cmp = P2GComparison(with_p2g=90.0, without_p2g=100.0)
    assert cmp.reduction == 10.0
    assert cmp.relative_reduction == pytest.approx(0.1)
    assert cmp.as_dict()["relative_reduction"] == pytest.approx(0.1)


@pytest.mark.slow
def test_p2g_lowers_toy_cost(toy):
    comparison = compare_p2g(toy)
    assert comparison.reduction > 0


@pytest.mark.slow
def test_fleets_are_all_solvable(toy):
    totals = {fleet: run(toy, RunOptions(fleet=fleet)).costs.total for fleet in ("hydrogen", "ev", "diesel")}
    assert all(math.isfinite(v) for v in totals.values())


@pytest.mark.longrunning
def test_full_fixture_winter_day():
    sc = load_scenario(bundled_fixture("ieee30_belgium24"))
    sol = run(sc, RunOptions(day="winter", solve=SolveOptions(rel_gap_tol=1e-3)))

    assert sol.status == "optimal"
    assert sol.costs.additivity_residual() <= 1e-6 * max(1.0, abs(sol.costs.total))


def test_free_coal_costs_nothing_but_still_burns():
    unit = make_unit(a=0.0, b=40.0, c=800.0, coal_price=0.0)
    sol = run(single_bus_scenario([unit], loads=(0.5, 0.6)))

    assert sol.costs.fuel == pytest.approx(0.0, abs=1e-9)
    assert sol.fuel_tons[0] == pytest.approx([40.0 * 0.5 + 800.0, 40.0 * 0.6 + 800.0])


# ---------------------------------------------------------------------------
# Full fixture experiments
# ---------------------------------------------------------------------------

FIXTURE_OPTIONS = RunOptions(solve=SolveOptions(rel_gap_tol=1e-3))


@pytest.fixture(scope="module")
def full_fixture():
    return load_scenario(bundled_fixture("ieee30_belgium24"))


@pytest.mark.longrunning
def test_p2g_reduction_on_full_fixture(full_fixture):
    comparison = compare_p2g(full_fixture, FIXTURE_OPTIONS)

    assert comparison.with_p2g < comparison.without_p2g
    assert 0.02 <= comparison.relative_reduction <= 0.15


@pytest.mark.longrunning
def test_penalty_sweep_has_interior_minimum(full_fixture):
    table = sweep_penalty(full_fixture, [0.01, 0.05, 0.08, 0.12], FIXTURE_OPTIONS)

    assert (table["status"] == "optimal").all()
    assert interior_minimum(table) is not None


@pytest.mark.longrunning
def test_more_reserve_never_costs_less(full_fixture):
    table = sweep_reserve(full_fixture, [0.05, 0.2], FIXTURE_OPTIONS).set_index("rho")
    low, high = table.loc[0.05, "total"], table.loc[0.2, "total"]

    # Both points carry the same 1e-3 gap.
    assert high >= low - 1e-3 * abs(low)
