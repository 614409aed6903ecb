"""Cross-checks of the model against the brute-force oracles in ies.oracle."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ies.exceptions import InstanceTooLarge, ModelError, SolveFailed
from ies.gas import mccormick_rows
from ies.oracle import (
    cone_form_holds,
    enumerate_uc,
    grid_search_gas,
    mccormick_min,
    ratio_form_holds,
)
from ies.runner import RunOptions, run
from ies.scenario import GasNetwork, GasNode, GasPipe
from ies.solver import SolveOptions
from tests.conftest import make_unit, single_bus_scenario

# ---------------------------------------------------------------------------
# Unit commitment
# ---------------------------------------------------------------------------


def test_uc_oracle_single_unit_by_hand():
    sc = single_bus_scenario([make_unit()], loads=(0.5, 0.6))
    res = enumerate_uc(sc)

    expected = 50.0 * (0.1 * 0.5**2 + 40.0 * 0.5 + 800.0) + 50.0 * (0.1 * 0.6**2 + 40.0 * 0.6 + 800.0)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(expected)
    assert res.u == [[1, 1]]
    assert res.patterns == 4


def test_uc_oracle_prices_curtailment():
    sc = single_bus_scenario([make_unit()], loads=(0.5, 0.6), availability=(0.3, 0.3))
    res = enumerate_uc(sc)

    # The unit cannot go below p_min, so 0.05 p.u. of wind is curtailed in slot 0.
    fuel = 50.0 * (0.1 * 0.25**2 + 40.0 * 0.25 + 800.0) + 50.0 * (0.1 * 0.3**2 + 40.0 * 0.3 + 800.0)
    assert res.objective == pytest.approx(fuel + 0.08 * 0.05 * 100_000.0)
    assert res.Pw == pytest.approx([0.25, 0.3])


def test_uc_oracle_counts_switching_costs():
    unit = make_unit(initial_on=False, initial_output=0.0, start_cost=1000.0, ramp_up=1.0)
    sc = single_bus_scenario([unit], loads=(0.5,))
    res = enumerate_uc(sc)

    assert res.objective == pytest.approx(1000.0 + 50.0 * (0.1 * 0.25 + 20.0 + 800.0))


def test_uc_oracle_reports_infeasible():
    sc = single_bus_scenario([make_unit()], loads=(1.5,))
    assert enumerate_uc(sc).status == "infeasible"


def test_uc_oracle_limits(toy):
    with pytest.raises(InstanceTooLarge) as info:
        enumerate_uc(single_bus_scenario([make_unit()], loads=[0.5] * 13))
    assert (info.value.limit, info.value.actual) == (12, 13)
    with pytest.raises(ModelError):
        enumerate_uc(toy)


def _random_uc(seed: int):
    rng = np.random.default_rng(seed)
    units = []
    for i in range(2):
        p_max = float(rng.uniform(0.6, 1.4))
        units.append(
            make_unit(
                i + 1,
                p_max=p_max,
                p_min=0.3 * p_max,
                a=float(rng.uniform(0.0, 0.2)),
                b=float(rng.uniform(20.0, 50.0)),
                c=float(rng.uniform(100.0, 900.0)),
                ramp_up=float(rng.uniform(0.3, 1.0)) * p_max,
                ramp_down=float(rng.uniform(0.3, 1.0)) * p_max,
                min_up=int(rng.integers(1, 3)),
                min_down=int(rng.integers(1, 3)),
                start_cost=float(rng.uniform(0.0, 2000.0)),
                stop_cost=float(rng.uniform(0.0, 1000.0)),
                initial_on=bool(rng.integers(0, 2)),
                initial_output=None,
            )
        )
    cap = sum(u.p_max for u in units)
    loads = rng.uniform(0.2, 0.8, 3) * cap / 1.05
    availability = rng.uniform(0.0, 0.5, 3)
    return single_bus_scenario(units, loads=loads.tolist(), availability=availability.tolist())


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_branch_and_bound_matches_enumeration(seed):
    sc = _random_uc(seed)
    expected = enumerate_uc(sc)
    options = RunOptions(solve=SolveOptions(rel_gap_tol=1e-8, feas_tol=1e-9, max_cut_rounds=2000))

    if expected.status == "infeasible":
        with pytest.raises(SolveFailed):
            run(sc, options)
        return
    sol = run(sc, options)
    assert sol.status == "optimal"
    assert sol.costs.total == pytest.approx(expected.objective, rel=1e-6)


# ---------------------------------------------------------------------------
# Bilinear envelope and cone form
# ---------------------------------------------------------------------------


def test_envelope_is_exact_at_binary_directions():
    rng = np.random.default_rng(5)
    box_m, box_n = (2500.0, 4900.0), (900.0, 4382.44)
    for _ in range(200):
        pm, pn = rng.uniform(*box_m), rng.uniform(*box_n)
        assert mccormick_min(1.0, pm, pn, box_m, box_n) == pytest.approx(pm - pn)
        assert mccormick_min(-1.0, pm, pn, box_m, box_n) == pytest.approx(pn - pm)


def test_envelope_is_exact_on_a_thousand_point_boxes():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        x, pm, pn = rng.uniform(-1.0, 1.0), rng.uniform(900.0, 4900.0), rng.uniform(900.0, 4900.0)
        assert abs(mccormick_min(x, pm, pn, (pm, pm), (pn, pn)) - x * (pm - pn)) <= 1e-9


@given(
    x=st.floats(min_value=-1.0, max_value=1.0),
    pm=st.floats(min_value=900.0, max_value=4900.0),
    pn=st.floats(min_value=900.0, max_value=4900.0),
)
def test_envelope_is_exact_on_point_boxes(x, pm, pn):
    assert mccormick_min(x, pm, pn, (pm, pm), (pn, pn)) == pytest.approx(x * (pm - pn), abs=1e-9)


def test_envelope_agrees_with_model_rows():
    rng = np.random.default_rng(9)
    box_m, box_n = (2500.0, 4900.0), (900.0, 4382.44)
    for _ in range(500):
        x, pm, pn = rng.uniform(-1.0, 1.0), rng.uniform(*box_m), rng.uniform(*box_n)
        lower = max(lhs for lhs, sense in mccormick_rows(x, pm, pn, box_m, box_n) if sense == ">=")
        oracle = mccormick_min(x, pm, pn, box_m, box_n)
        assert oracle == pytest.approx(lower, abs=1e-6)
        assert oracle <= x * (pm - pn) + 1e-6


def test_envelope_needs_finite_boxes():
    with pytest.raises(ModelError):
        mccormick_min(0.0, 1.0, 1.0, (0.0, math.inf), (0.0, 1.0))


def test_cone_and_ratio_forms_agree():
    rng = np.random.default_rng(13)
    c = rng.uniform(10.0, 300.0, 10_000)
    flow = rng.uniform(-50.0, 50.0, 10_000) * c
    lam = rng.uniform(-1.0, 2000.0, 10_000)

    cone = [cone_form_holds(f, ci, li) for f, ci, li in zip(flow, c, lam)]
    ratio = [ratio_form_holds(f, ci, li) for f, ci, li in zip(flow, c, lam)]
    assert cone == ratio
    assert 0 < sum(cone) < len(cone)


# ---------------------------------------------------------------------------
# Gas network
# ---------------------------------------------------------------------------


def test_grid_search_on_toy_network(toy):
    price = toy.gas_net.gas_price
    res = grid_search_gas(toy.gas_net, {2: 6000.0}, resolution=401, balance_tol=50.0)

    assert res.status == "optimal"
    assert res.objective == pytest.approx(6000.0 * price, abs=50.0 * price)
    drop = res.pi[1] - res.pi[2]
    assert res.flow[0] == pytest.approx(200.0 * math.sqrt(drop))


def test_grid_search_agrees_with_model(toy, toy_solution):
    gas, ch4 = toy_solution.gas, toy_solution.coupling.f_ch4
    source = gas.s[1][0]
    assert source + ch4[0] == pytest.approx(6000.0, abs=1e-3)

    res = grid_search_gas(toy.gas_net, {2: 6000.0}, resolution=401, balance_tol=50.0, injections={2: ch4[0]})
    assert res.objective == pytest.approx(source * toy.gas_net.gas_price, abs=50.0 * toy.gas_net.gas_price)


def test_grid_search_infeasible_beyond_pipe_capacity():
    nodes = (GasNode(1, 900.0, 1600.0, s_hi=1e6), GasNode(2, 900.0, 1600.0))
    net = GasNetwork(nodes=nodes, pipes=(GasPipe(1, 2, 10.0),), gas_price=0.1)
    res = grid_search_gas(net, {2: 5000.0}, resolution=21)

    assert res.status == "infeasible"
    assert "refine the grid" in res.message


def test_grid_search_limits():
    nodes = tuple(GasNode(i, 900.0, 1600.0) for i in range(1, 5))
    with pytest.raises(InstanceTooLarge):
        grid_search_gas(GasNetwork(nodes=nodes), {})
    with pytest.raises(ModelError):
        grid_search_gas(GasNetwork(nodes=nodes[:2]), {}, resolution=1)
