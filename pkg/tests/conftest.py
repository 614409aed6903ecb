"""
Shared pytest fixtures and helpers for ies tests.
"""

import pytest

from ies.scenario import (
    GasNetwork,
    PowerNetwork,
    PriceBook,
    SafetyLimits,
    Scenario,
    ThermalUnit,
    WindFarm,
    bundled_fixture,
    load_scenario,
)

# All env keys the config loader inspects (clean slate for every test).
ENV_KEYS = [
    "IES_REL_GAP_TOL",
    "IES_FEAS_TOL",
    "IES_TIGHTNESS_TOL",
    "IES_BRANCHING",
    "IES_NODE_ORDER",
    "IES_MAX_CUT_ROUNDS",
    "IES_HEURISTIC_EVERY",
    "IES_WORKERS",
    "IES_MAX_NODES",
    "IES_TIME_LIMIT_S",
    "IES_OUT_DIR",
]


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    """Ensure none of the IES_* env vars leak into tests."""
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)


def make_unit(unit_id: int = 1, bus: int = 1, **overrides) -> ThermalUnit:
    """A mid-size coal unit; keyword overrides replace any field."""
    data = dict(
        id=unit_id,
        bus=bus,
        p_max=1.0,
        p_min=0.25,
        a=0.1,
        b=40.0,
        c=800.0,
        ramp_up=0.5,
        ramp_down=0.5,
        min_down=1,
        min_up=1,
        start_cost=1000.0,
        stop_cost=500.0,
        coal_price=50.0,
        initial_on=True,
    )
    data.update(overrides)
    return ThermalUnit(**data)


def single_bus_scenario(
    units: list[ThermalUnit] | None = None,
    loads: list[float] | tuple[float, ...] = (0.8, 1.0, 0.9),
    availability: list[float] | tuple[float, ...] | None = None,
    *,
    delta_wp: float = 0.08,
    rho: float = 0.05,
    slot_hours: float = 1.0,
    name: str = "single_bus",
) -> Scenario:
    """One bus, no lines, no gas, no P2G, no coal chain."""
    horizon = len(loads)
    availability = availability if availability is not None else [0.0] * horizon
    return Scenario(
        horizon=horizon,
        slot_hours=slot_hours,
        power_net=PowerNetwork(buses=(1,), lines=(), reserve_rho=rho),
        gas_net=GasNetwork(),
        units=tuple(units or [make_unit()]),
        wind=WindFarm(bus=1, availability=tuple(availability), delta_wp=delta_wp, cap=1.0e7),
        p2g=None,
        coal=None,
        safety=SafetyLimits(),
        prices=PriceBook(),
        loads={1: tuple(loads)},
        gas_demands={},
        name=name,
    )


@pytest.fixture
def toy_path():
    return bundled_fixture("toy_3bus_2node")


@pytest.fixture
def toy(toy_path):
    return load_scenario(toy_path)


@pytest.fixture(scope="session")
def toy_solution():
    """The toy system solved once per worker with default options."""
    from ies.runner import run

    return run(load_scenario(bundled_fixture("toy_3bus_2node")))


@pytest.fixture(scope="session")
def toy_run_dir(tmp_path_factory, toy_solution):
    """A run directory written from the toy solution."""
    from ies.report import report

    out = tmp_path_factory.mktemp("toy_run")
    report(toy_solution, out, feas_tol=1e-6)
    return out
