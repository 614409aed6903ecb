"""
Scenario model: immutable domain types, JSON ingestion, validation and unit conversions.

A Scenario is validated on construction (``__post_init__``), so instances built in
code and instances loaded from JSON obey the same invariants. Every other module
consumes these types read-only.
"""

import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np
import pandas as pd

from ies.constants import MBTU_TO_M3, Q_CH4, Q_H2
from ies.exceptions import ScenarioError
from ies.gas import substitute_pressure

logger = logging.getLogger(__name__)

ETA_ELEC_RANGE = (0.57, 0.73)
ETA_METH_RANGE = (0.50, 0.64)

DAY_PROFILES = ("winter", "summer", "annual")

REQUIRED_KEYS = (
    "horizon",
    "slot_hours",
    "power",
    "gas",
    "units",
    "wind",
    "p2g",
    "coal",
    "safety",
    "prices",
    "loads",
    "gas_demands",
)

Series = tuple[float, ...]


def convert_gas_price(price_per_mbtu: float, mbtu_to_m3: float = MBTU_TO_M3) -> float:
    """Convert a gas price from $/MBTU to $/m³ (1 MBTU ≈ 28.3 m³)."""
    if price_per_mbtu < 0:
        raise ScenarioError("gas_price_mbtu", f"negative gas price {price_per_mbtu}")
    if mbtu_to_m3 <= 0:
        raise ScenarioError("prices.mbtu_to_m3", "conversion factor must be positive")
    return price_per_mbtu / mbtu_to_m3


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    x: float
    p_min: float
    p_max: float

    @property
    def rating(self) -> float:
        return max(-self.p_min, self.p_max)


@dataclass(frozen=True)
class PowerNetwork:
    """Buses, DC lines (reactance and flow limits in p.u.), MVA base and reserve ρ."""

    buses: tuple[int, ...]
    lines: tuple[Line, ...]
    base_mva: float = 100.0
    reserve_rho: float = 0.05
    ref_bus: int | None = None

    @property
    def reference(self) -> int:
        return self.ref_bus if self.ref_bus is not None else self.buses[0]

    @property
    def kw_per_pu(self) -> float:
        return self.base_mva * 1000.0

    def export_capacity(self, bus: int) -> float:
        """Sum of the ratings of the lines touching *bus* (p.u.)."""
        return sum(
            line.rating for line in self.lines if bus in (line.from_bus, line.to_bus)
        )


@dataclass(frozen=True)
class ThermalUnit:
    """Quadratic-cost coal unit. Fuel is a·P² + b·P + c·u tons per hour."""

    id: int
    bus: int
    p_max: float
    p_min: float
    a: float
    b: float
    c: float
    ramp_up: float
    ramp_down: float
    min_down: int
    min_up: int
    start_cost: float
    stop_cost: float
    coal_price: float
    initial_on: bool = True
    initial_output: float | None = None

    @property
    def initial_p(self) -> float:
        if self.initial_output is not None:
            return self.initial_output
        return self.p_min if self.initial_on else 0.0

    def fuel_tons(self, p: float, on: float = 1.0) -> float:
        return self.a * p * p + self.b * p + self.c * on


@dataclass(frozen=True)
class GasNode:
    id: int
    pi_lo: float
    pi_hi: float
    s_lo: float = 0.0
    s_hi: float = 0.0
    price: float | None = None


@dataclass(frozen=True)
class GasPipe:
    from_node: int
    to_node: int
    weymouth_c: float
    f_max: float | None = None


@dataclass(frozen=True)
class GasNetwork:
    """Nodes with π = p² bounds and source bounds, Weymouth pipes, price in $/m³."""

    nodes: tuple[GasNode, ...] = ()
    pipes: tuple[GasPipe, ...] = ()
    gas_price: float = 0.0

    def node(self, node_id: int) -> GasNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def source_price(self, node: GasNode) -> float:
        return self.gas_price if node.price is None else node.price

    def flow_cap(self, pipe: GasPipe) -> float:
        """F_max: explicit, else the Weymouth flow at the largest pressure-square drop."""
        if pipe.f_max is not None:
            return pipe.f_max
        top = max(self.node(pipe.from_node).pi_hi, self.node(pipe.to_node).pi_hi)
        return pipe.weymouth_c * math.sqrt(top)


@dataclass(frozen=True)
class WindFarm:
    """Curtailable wind: availability in p.u., nameplate in kW, penalty δ in $/kWh."""

    bus: int
    availability: Series
    delta_wp: float
    cap: float
    profiles: Mapping[str, Series] = field(default_factory=dict)


@dataclass(frozen=True)
class P2GPlant:
    """Electrolysis (H₂ to trucks) plus methanation (CH₄ into the gas network)."""

    bus: int
    gas_node: int
    eta_elec: Series
    eta_meth: Series
    alpha_h2: float
    alpha_ch4_elec: float
    alpha_ch4_meth: float
    f_h2_max: float
    f_ch4_max: float
    methanation_om: float = 0.0

    def h2_kwh_per_m3(self, t: int) -> float:
        """Effective electricity per m³ of station hydrogen in slot *t*."""
        return self.alpha_h2 / self.eta_elec[t]

    def ch4_kwh_per_m3(self, t: int) -> float:
        """Effective electricity per m³ of methane: 4 m³ H₂ electrolysis plus methanation."""
        return (
            4.0 * self.alpha_ch4_elec / self.eta_elec[t]
            + self.alpha_ch4_meth / self.eta_meth[t]
        )


@dataclass(frozen=True)
class CoalChain:
    """Mining plan (tons per slot) with H₂ yield and truck H₂ use (m³/ton)."""

    mined: Series
    alpha_coal: Series
    alpha_truck: Series


@dataclass(frozen=True)
class SafetyLimits:
    lfl_h2: float = 4.0
    ufl_h2: float = 75.0
    lel_h2: float = 4.0
    uel_h2: float = 77.0
    lfl_ch4: float = 5.0
    ufl_ch4: float = 15.0
    lel_ch4: float = 5.0
    uel_ch4: float = 17.0
    q_h2: float = Q_H2
    q_ch4: float = Q_CH4


@dataclass(frozen=True)
class PriceBook:
    """Prices in $. ``carbon_prices`` holds named columns (e.g. china, eu) in $/tCO₂."""

    carbon_price: float = 0.0
    mbtu_to_m3: float = MBTU_TO_M3
    coal_sale_price: float = 0.0
    truck_cost_coeff: float = 0.0
    carbon_prices: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class FleetParams:
    """Energy use and prices of the non-hydrogen truck fleets."""

    ev_kwh_per_ton: float = 4.5
    ev_tariff: float = 0.08
    diesel_l_per_ton: float = 3.0
    diesel_price: float = 1.0


@dataclass(frozen=True)
class Scenario:
    """Complete problem instance. Validated on construction; never mutated."""

    horizon: int
    slot_hours: float
    power_net: PowerNetwork
    gas_net: GasNetwork
    units: tuple[ThermalUnit, ...]
    wind: WindFarm
    p2g: P2GPlant | None
    coal: CoalChain | None
    safety: SafetyLimits
    prices: PriceBook
    loads: Mapping[int, Series]
    gas_demands: Mapping[int, Series]
    name: str = "scenario"
    provenance: str = ""
    fleet: FleetParams = field(default_factory=FleetParams)
    emissions: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        validate_scenario(self)

    def bus_load(self, bus: int, t: int) -> float:
        series = self.loads.get(bus)
        return series[t] if series is not None else 0.0

    def total_load(self, t: int) -> float:
        return sum(series[t] for series in self.loads.values())


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _check_length(series: Sequence[float], horizon: int, where: str) -> None:
    if len(series) != horizon:
        raise ScenarioError(
            where,
            f"series-length mismatch: {len(series)} entries, horizon is {horizon}",
        )


def _check_nonnegative(value: float, where: str) -> None:
    if not value >= 0:
        raise ScenarioError(where, f"must be nonnegative, got {value}")


def _validate_power(s: Scenario) -> set[int]:
    net = s.power_net
    buses = set(net.buses)
    if not buses:
        raise ScenarioError("power.buses", "at least one bus is required")
    if len(buses) != len(net.buses):
        raise ScenarioError("power.buses", "duplicate bus id")
    if not 0 <= net.reserve_rho < 1:
        raise ScenarioError("power.reserve_rho", f"ρ must lie in [0, 1), got {net.reserve_rho}")
    if net.base_mva <= 0:
        raise ScenarioError("power.base_mva", "must be positive")
    if net.reference not in buses:
        raise ScenarioError("power.ref_bus", f"unknown bus {net.reference}")
    for k, line in enumerate(net.lines):
        where = f"power.lines[{k}]"
        if line.from_bus not in buses or line.to_bus not in buses:
            raise ScenarioError(where, "line references an unknown bus")
        if line.from_bus == line.to_bus:
            raise ScenarioError(where, "line connects a bus to itself")
        if not line.x > 0:
            raise ScenarioError(f"{where}.x", "reactance must be positive")
        if not line.p_min <= 0 <= line.p_max:
            raise ScenarioError(where, "flow limits must satisfy p_min <= 0 <= p_max")
    graph = nx.Graph()
    graph.add_nodes_from(net.buses)
    graph.add_edges_from((line.from_bus, line.to_bus) for line in net.lines)
    if not nx.is_connected(graph):
        raise ScenarioError("power.lines", "power network is not connected")
    return buses


def _validate_units(s: Scenario, buses: set[int]) -> None:
    seen: set[int] = set()
    for k, unit in enumerate(s.units):
        where = f"units[{k}]"
        if unit.id in seen:
            raise ScenarioError(f"{where}.id", f"duplicate unit id {unit.id}")
        seen.add(unit.id)
        if unit.bus not in buses:
            raise ScenarioError(f"{where}.bus", f"unknown bus {unit.bus}")
        if not 0 <= unit.p_min <= unit.p_max:
            raise ScenarioError(where, "output bounds must satisfy 0 <= p_min <= p_max")
        if unit.a < 0:
            raise ScenarioError(f"{where}.a", "quadratic coefficient must be nonnegative")
        if not (unit.ramp_up > 0 and unit.ramp_down > 0):
            raise ScenarioError(where, "ramp limits must be positive")
        if unit.min_down < 1 or unit.min_up < 1:
            raise ScenarioError(where, "minimum up/down times must be at least one slot")
        _check_nonnegative(unit.start_cost, f"{where}.start_cost")
        _check_nonnegative(unit.stop_cost, f"{where}.stop_cost")
        _check_nonnegative(unit.coal_price, f"{where}.coal_price")
        p0 = unit.initial_p
        if unit.initial_on and not unit.p_min <= p0 <= unit.p_max:
            raise ScenarioError(f"{where}.initial_output", "outside [p_min, p_max]")
        if not unit.initial_on and p0 != 0:
            raise ScenarioError(f"{where}.initial_output", "must be 0 for an off unit")


def _validate_gas(s: Scenario) -> set[int]:
    net = s.gas_net
    node_ids = [n.id for n in net.nodes]
    nodes = set(node_ids)
    if len(nodes) != len(node_ids):
        raise ScenarioError("gas.nodes", "duplicate node id")
    _check_nonnegative(net.gas_price, "gas.gas_price")
    for k, node in enumerate(net.nodes):
        where = f"gas.nodes[{k}]"
        if not 0 <= node.pi_lo < node.pi_hi:
            raise ScenarioError(where, "pressure bounds must satisfy 0 <= p_lo < p_hi")
        if node.s_lo > node.s_hi:
            raise ScenarioError(where, "source bounds must satisfy s_lo <= s_hi")
        if node.price is not None:
            _check_nonnegative(node.price, f"{where}.price")
    for k, pipe in enumerate(net.pipes):
        where = f"gas.pipes[{k}]"
        if pipe.from_node not in nodes or pipe.to_node not in nodes:
            raise ScenarioError(where, "pipe references an unknown node")
        if pipe.from_node == pipe.to_node:
            raise ScenarioError(where, "pipe connects a node to itself")
        if not pipe.weymouth_c > 0:
            raise ScenarioError(f"{where}.weymouth_c", "Weymouth constant must be positive")
        if pipe.f_max is not None and not pipe.f_max > 0:
            raise ScenarioError(f"{where}.f_max", "must be positive")
    return nodes


def _validate_wind(s: Scenario, buses: set[int]) -> None:
    wind = s.wind
    if wind.bus not in buses:
        raise ScenarioError("wind.bus", f"unknown bus {wind.bus}")
    _check_nonnegative(wind.delta_wp, "wind.delta_wp")
    _check_nonnegative(wind.cap, "wind.cap")
    _check_length(wind.availability, s.horizon, "wind.availability")
    kw_per_pu = s.power_net.kw_per_pu
    for t, value in enumerate(wind.availability):
        if value < 0:
            raise ScenarioError(f"wind.availability[{t}]", "wind availability negative")
        if value * kw_per_pu > wind.cap * (1 + 1e-9):
            raise ScenarioError(
                f"wind.availability[{t}]", "wind availability above nameplate capacity"
            )
    for day, profile in wind.profiles.items():
        _check_length(profile, s.horizon, f"wind.profiles.{day}")
        if any(v < 0 for v in profile):
            raise ScenarioError(f"wind.profiles.{day}", "wind availability negative")


def _validate_p2g(s: Scenario, buses: set[int], nodes: set[int]) -> None:
    plant = s.p2g
    if plant is None:
        return
    if plant.bus not in buses:
        raise ScenarioError("p2g.bus", f"unknown bus {plant.bus}")
    if plant.gas_node not in nodes:
        raise ScenarioError("p2g.gas_node", f"unknown gas node {plant.gas_node}")
    _check_length(plant.eta_elec, s.horizon, "p2g.eta_elec")
    _check_length(plant.eta_meth, s.horizon, "p2g.eta_meth")
    lo_e, hi_e = ETA_ELEC_RANGE
    lo_m, hi_m = ETA_METH_RANGE
    for t, (e, m) in enumerate(zip(plant.eta_elec, plant.eta_meth)):
        if not lo_e <= e <= hi_e:
            raise ScenarioError(f"p2g.eta_elec[{t}]", f"outside [{lo_e}, {hi_e}]")
        if not lo_m <= m <= hi_m:
            raise ScenarioError(f"p2g.eta_meth[{t}]", f"outside [{lo_m}, {hi_m}]")
        if not e > m:
            raise ScenarioError(
                f"p2g.eta_meth[{t}]", "electrolysis efficiency must exceed methanation"
            )
    for name in ("alpha_h2", "alpha_ch4_elec", "alpha_ch4_meth", "f_h2_max", "f_ch4_max",
                 "methanation_om"):
        _check_nonnegative(getattr(plant, name), f"p2g.{name}")


def _validate_coal(s: Scenario) -> None:
    chain = s.coal
    if chain is None:
        return
    for name in ("mined", "alpha_coal", "alpha_truck"):
        series = getattr(chain, name)
        _check_length(series, s.horizon, f"coal.{name}")
        for t, v in enumerate(series):
            _check_nonnegative(v, f"coal.{name}[{t}]")


def _validate_safety(limits: SafetyLimits) -> None:
    pairs = (
        ("lfl_h2", "ufl_h2"),
        ("lel_h2", "uel_h2"),
        ("lfl_ch4", "ufl_ch4"),
        ("lel_ch4", "uel_ch4"),
    )
    for lo_name, hi_name in pairs:
        lo, hi = getattr(limits, lo_name), getattr(limits, hi_name)
        if not 0 < lo < hi < 100:
            raise ScenarioError(f"safety.{lo_name}", "limits must satisfy 0 < lower < upper < 100")
    if not (limits.q_h2 > 0 and limits.q_ch4 > 0):
        raise ScenarioError("safety.q_h2", "calorific values must be positive")


def _validate_prices(prices: PriceBook) -> None:
    for name in ("carbon_price", "coal_sale_price", "truck_cost_coeff"):
        _check_nonnegative(getattr(prices, name), f"prices.{name}")
    if not prices.mbtu_to_m3 > 0:
        raise ScenarioError("prices.mbtu_to_m3", "must be positive")
    for key, value in prices.carbon_prices.items():
        _check_nonnegative(value, f"prices.carbon_prices.{key}")


def validate_scenario(s: Scenario) -> None:
    """Check every invariant; raise ScenarioError naming the offending field."""
    if s.horizon < 1:
        raise ScenarioError("horizon", "horizon must be at least one slot")
    if not s.slot_hours > 0:
        raise ScenarioError("slot_hours", "must be positive")
    buses = _validate_power(s)
    _validate_units(s, buses)
    nodes = _validate_gas(s)
    _validate_wind(s, buses)
    _validate_p2g(s, buses, nodes)
    _validate_coal(s)
    _validate_safety(s.safety)
    _validate_prices(s.prices)
    for bus, series in s.loads.items():
        if bus not in buses:
            raise ScenarioError(f"loads.{bus}", f"unknown bus {bus}")
        _check_length(series, s.horizon, f"loads.{bus}")
        if any(v < 0 for v in series):
            raise ScenarioError(f"loads.{bus}", "negative load")
    for node, series in s.gas_demands.items():
        if node not in nodes:
            raise ScenarioError(f"gas_demands.{node}", f"unknown gas node {node}")
        _check_length(series, s.horizon, f"gas_demands.{node}")
        if any(v < 0 for v in series):
            raise ScenarioError(f"gas_demands.{node}", "negative gas demand")
    f = s.fleet
    for name in ("ev_kwh_per_ton", "ev_tariff", "diesel_l_per_ton", "diesel_price"):
        _check_nonnegative(getattr(f, name), f"fleet.{name}")
    for key, value in s.emissions.items():
        _check_nonnegative(value, f"emissions.{key}")


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------


def _require(data: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(data, Mapping):
        raise ScenarioError(where, "expected an object")
    if key not in data:
        raise ScenarioError(f"{where}.{key}" if where else key, "missing required field")
    return data[key]


def _mapping(value: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ScenarioError(where, f"expected an object, got {type(value).__name__}")
    return value


def _array(value: Any, where: str) -> list[Any]:
    if not isinstance(value, list):
        raise ScenarioError(where, f"expected an array, got {type(value).__name__}")
    return value


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(where, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ScenarioError(where, "expected a finite number")
    return float(value)


def _integer(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(where, f"expected an integer, got {value!r}")
    return value


def _series(value: Any, where: str, horizon: int, *, fill: int | None = None) -> Series:
    """Parse a series; a scalar is broadcast when *fill* is given."""
    if fill is not None and isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),) * fill
    if not isinstance(value, list):
        raise ScenarioError(where, "expected an array of numbers")
    out = tuple(_number(v, f"{where}[{k}]") for k, v in enumerate(value))
    _check_length(out, horizon, where)
    return out


def _series_map(raw: Any, where: str, horizon: int) -> dict[int, Series]:
    """Either ``{id: [series]}`` or ``{"profile": [...], "peak": {id: value}}``."""
    if not isinstance(raw, Mapping):
        raise ScenarioError(where, "expected an object")
    if "profile" in raw:
        profile = _series(raw["profile"], f"{where}.profile", horizon)
        peaks = _require(raw, "peak", where)
        if not isinstance(peaks, Mapping):
            raise ScenarioError(f"{where}.peak", "expected an object")
        out = {}
        for key, peak in peaks.items():
            value = _number(peak, f"{where}.peak.{key}")
            out[_key_id(key, where)] = tuple(value * f for f in profile)
        return out
    return {
        _key_id(key, where): _series(series, f"{where}.{key}", horizon)
        for key, series in raw.items()
    }


def _key_id(key: Any, where: str) -> int:
    try:
        return int(key)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}.{key}", "keys must be integer ids")


def _power_from_dict(raw: Any) -> PowerNetwork:
    raw = _mapping(raw, "power")
    raw_buses = _array(_require(raw, "buses", "power"), "power.buses")
    buses = tuple(_integer(b, f"power.buses[{k}]") for k, b in enumerate(raw_buses))
    lines = []
    for k, item in enumerate(_array(_require(raw, "lines", "power"), "power.lines")):
        where = f"power.lines[{k}]"
        item = _mapping(item, where)
        p_max = item.get("p_max", item.get("rating"))
        if p_max is None:
            raise ScenarioError(where, "missing required field p_max (or rating)")
        p_max = _number(p_max, f"{where}.p_max")
        p_min = _number(item.get("p_min", -p_max), f"{where}.p_min")
        lines.append(
            Line(
                from_bus=_integer(_require(item, "from", where), f"{where}.from"),
                to_bus=_integer(_require(item, "to", where), f"{where}.to"),
                x=_number(_require(item, "x", where), f"{where}.x"),
                p_min=p_min,
                p_max=p_max,
            )
        )
    return PowerNetwork(
        buses=buses,
        lines=tuple(lines),
        base_mva=_number(raw.get("base_mva", 100.0), "power.base_mva"),
        reserve_rho=_number(raw.get("reserve_rho", 0.05), "power.reserve_rho"),
        ref_bus=raw.get("ref_bus"),
    )


def _units_from_list(raw: Any) -> tuple[ThermalUnit, ...]:
    if not isinstance(raw, list):
        raise ScenarioError("units", "expected an array")
    units = []
    for k, item in enumerate(raw):
        where = f"units[{k}]"
        item = _mapping(item, where)

        def num(key: str, default: float | None = None) -> float:
            if default is not None and key not in item:
                return default
            return _number(_require(item, key, where), f"{where}.{key}")

        ramp = item.get("ramp")
        ramp_up = num("ramp_up") if ramp is None else _number(item.get("ramp_up", ramp), f"{where}.ramp_up")
        ramp_down = num("ramp_down") if ramp is None else _number(item.get("ramp_down", ramp), f"{where}.ramp_down")
        initial_output = item.get("initial_output")
        units.append(
            ThermalUnit(
                id=_integer(_require(item, "id", where), f"{where}.id"),
                bus=_integer(_require(item, "bus", where), f"{where}.bus"),
                p_max=num("p_max"),
                p_min=num("p_min"),
                a=num("a"),
                b=num("b"),
                c=num("c"),
                ramp_up=ramp_up,
                ramp_down=ramp_down,
                min_down=_integer(_require(item, "min_down", where), f"{where}.min_down"),
                min_up=_integer(_require(item, "min_up", where), f"{where}.min_up"),
                start_cost=num("start_cost"),
                stop_cost=num("stop_cost"),
                coal_price=num("coal_price"),
                initial_on=bool(item.get("initial_on", True)),
                initial_output=(
                    None
                    if initial_output is None
                    else _number(initial_output, f"{where}.initial_output")
                ),
            )
        )
    return tuple(units)


def _gas_from_dict(raw: Any, mbtu_to_m3: float) -> GasNetwork:
    raw = _mapping(raw, "gas")
    if "gas_price" in raw:
        price = _number(raw["gas_price"], "gas.gas_price")
    elif "gas_price_mbtu" in raw:
        price = convert_gas_price(_number(raw["gas_price_mbtu"], "gas.gas_price_mbtu"), mbtu_to_m3)
    else:
        price = 0.0
    nodes = []
    for k, item in enumerate(_array(raw.get("nodes", []), "gas.nodes")):
        where = f"gas.nodes[{k}]"
        item = _mapping(item, where)
        p_lo = _number(_require(item, "p_lo", where), f"{where}.p_lo")
        p_hi = _number(_require(item, "p_hi", where), f"{where}.p_hi")
        try:
            pi_lo, pi_hi = substitute_pressure(p_lo, p_hi)
        except ValueError as e:
            raise ScenarioError(where, str(e))
        node_price = item.get("price")
        nodes.append(
            GasNode(
                id=_integer(_require(item, "id", where), f"{where}.id"),
                pi_lo=pi_lo,
                pi_hi=pi_hi,
                s_lo=_number(item.get("s_lo", 0.0), f"{where}.s_lo"),
                s_hi=_number(item.get("s_hi", 0.0), f"{where}.s_hi"),
                price=None if node_price is None else _number(node_price, f"{where}.price"),
            )
        )
    pipes = []
    for k, item in enumerate(_array(raw.get("pipes", []), "gas.pipes")):
        where = f"gas.pipes[{k}]"
        item = _mapping(item, where)
        f_max = item.get("f_max")
        pipes.append(
            GasPipe(
                from_node=_integer(_require(item, "from", where), f"{where}.from"),
                to_node=_integer(_require(item, "to", where), f"{where}.to"),
                weymouth_c=_number(_require(item, "weymouth_c", where), f"{where}.weymouth_c"),
                f_max=None if f_max is None else _number(f_max, f"{where}.f_max"),
            )
        )
    return GasNetwork(nodes=tuple(nodes), pipes=tuple(pipes), gas_price=price)


def _wind_from_dict(raw: Any, horizon: int) -> WindFarm:
    raw = _mapping(raw, "wind")
    profiles = {}
    for day, series in _mapping(raw.get("profiles") or {}, "wind.profiles").items():
        if day not in DAY_PROFILES:
            raise ScenarioError(f"wind.profiles.{day}", f"unknown day profile; expected one of {DAY_PROFILES}")
        profiles[day] = _series(series, f"wind.profiles.{day}", horizon)
    if "availability" in raw:
        availability = _series(raw["availability"], "wind.availability", horizon)
    elif "annual" in profiles:
        availability = profiles["annual"]
    else:
        raise ScenarioError("wind.availability", "missing required field")
    return WindFarm(
        bus=_integer(_require(raw, "bus", "wind"), "wind.bus"),
        availability=availability,
        delta_wp=_number(_require(raw, "delta_wp", "wind"), "wind.delta_wp"),
        cap=_number(_require(raw, "cap", "wind"), "wind.cap"),
        profiles=profiles,
    )


def _p2g_from_dict(raw: Any, horizon: int) -> P2GPlant | None:
    if raw is None:
        return None
    where = "p2g"
    raw = _mapping(raw, where)
    return P2GPlant(
        bus=_integer(_require(raw, "bus", where), "p2g.bus"),
        gas_node=_integer(_require(raw, "gas_node", where), "p2g.gas_node"),
        eta_elec=_series(_require(raw, "eta_elec", where), "p2g.eta_elec", horizon, fill=horizon),
        eta_meth=_series(_require(raw, "eta_meth", where), "p2g.eta_meth", horizon, fill=horizon),
        alpha_h2=_number(_require(raw, "alpha_h2", where), "p2g.alpha_h2"),
        alpha_ch4_elec=_number(_require(raw, "alpha_ch4_elec", where), "p2g.alpha_ch4_elec"),
        alpha_ch4_meth=_number(_require(raw, "alpha_ch4_meth", where), "p2g.alpha_ch4_meth"),
        f_h2_max=_number(_require(raw, "f_h2_max", where), "p2g.f_h2_max"),
        f_ch4_max=_number(_require(raw, "f_ch4_max", where), "p2g.f_ch4_max"),
        methanation_om=_number(raw.get("methanation_om", 0.0), "p2g.methanation_om"),
    )


def _coal_from_dict(raw: Any, horizon: int) -> CoalChain | None:
    if raw is None:
        return None
    raw = _mapping(raw, "coal")
    return CoalChain(
        mined=_series(_require(raw, "mined", "coal"), "coal.mined", horizon, fill=horizon),
        alpha_coal=_series(_require(raw, "alpha_coal", "coal"), "coal.alpha_coal", horizon, fill=horizon),
        alpha_truck=_series(_require(raw, "alpha_truck", "coal"), "coal.alpha_truck", horizon, fill=horizon),
    )


def _prices_from_dict(raw: Any) -> PriceBook:
    raw = _mapping(raw, "prices")
    rates = _mapping(raw.get("exchange_rates") or {}, "prices.exchange_rates")
    columns = {}
    for key, value in _mapping(raw.get("carbon_prices") or {}, "prices.carbon_prices").items():
        where = f"prices.carbon_prices.{key}"
        if isinstance(value, Mapping):
            amount = _number(_require(value, "value", where), f"{where}.value")
            currency = value.get("currency", "USD")
            if currency != "USD":
                if currency not in rates:
                    raise ScenarioError(where, f"no exchange rate for {currency}")
                amount *= _number(rates[currency], f"prices.exchange_rates.{currency}")
            columns[key] = amount
        else:
            columns[key] = _number(value, where)
    return PriceBook(
        carbon_price=_number(raw.get("carbon_price", 0.0), "prices.carbon_price"),
        mbtu_to_m3=_number(raw.get("mbtu_to_m3", MBTU_TO_M3), "prices.mbtu_to_m3"),
        coal_sale_price=_number(raw.get("coal_sale_price", 0.0), "prices.coal_sale_price"),
        truck_cost_coeff=_number(raw.get("truck_cost_coeff", 0.0), "prices.truck_cost_coeff"),
        carbon_prices=columns,
    )


def _safety_from_dict(raw: Mapping[str, Any] | None) -> SafetyLimits:
    if not raw:
        return SafetyLimits()
    base = SafetyLimits()
    values = {}
    for key, value in _mapping(raw, "safety").items():
        if not hasattr(base, key):
            raise ScenarioError(f"safety.{key}", "unknown safety limit")
        values[key] = _number(value, f"safety.{key}")
    return replace(base, **values)


def _fleet_from_dict(raw: Mapping[str, Any] | None) -> FleetParams:
    if not raw:
        return FleetParams()
    base = FleetParams()
    values = {}
    for key, value in _mapping(raw, "fleet").items():
        if not hasattr(base, key):
            raise ScenarioError(f"fleet.{key}", "unknown fleet parameter")
        values[key] = _number(value, f"fleet.{key}")
    return replace(base, **values)


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    if not isinstance(data, Mapping):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    for key in REQUIRED_KEYS:
        _require(data, key, "")
    horizon = _integer(data["horizon"], "horizon")
    if horizon < 1:
        raise ScenarioError("horizon", "horizon must be at least one slot")
    prices = _prices_from_dict(data["prices"] or {})
    emissions = {
        key: _number(value, f"emissions.{key}")
        for key, value in _mapping(data.get("emissions") or {}, "emissions").items()
    }
    return Scenario(
        horizon=horizon,
        slot_hours=_number(data["slot_hours"], "slot_hours"),
        power_net=_power_from_dict(data["power"]),
        gas_net=_gas_from_dict(data["gas"] or {}, prices.mbtu_to_m3),
        units=_units_from_list(data["units"]),
        wind=_wind_from_dict(data["wind"], horizon),
        p2g=_p2g_from_dict(data["p2g"], horizon),
        coal=_coal_from_dict(data["coal"], horizon),
        safety=_safety_from_dict(data["safety"]),
        prices=prices,
        loads=_series_map(data["loads"], "loads", horizon),
        gas_demands=_series_map(data["gas_demands"] or {}, "gas_demands", horizon),
        name=str(data.get("name", "scenario")),
        provenance=str(data.get("provenance", "")),
        fleet=_fleet_from_dict(data.get("fleet")),
        emissions=emissions,
    )


def load_scenario(path: Path | str) -> Scenario:
    """Load and validate a scenario JSON file."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ScenarioError(str(path), "scenario file not found")
    except UnicodeDecodeError:
        raise ScenarioError(str(path), "scenario file is not valid UTF-8")
    except json.JSONDecodeError as e:
        raise ScenarioError(str(path), f"invalid JSON: {e.msg} (line {e.lineno})")
    scenario = scenario_from_dict(data)
    logger.debug(
        "loaded scenario %s: %d buses, %d units, %d gas nodes, T=%d",
        scenario.name,
        len(scenario.power_net.buses),
        len(scenario.units),
        len(scenario.gas_net.nodes),
        scenario.horizon,
    )
    return scenario


def bundled_fixture(name: str) -> Path:
    """Path of a fixture shipped in ies/fixtures (e.g. "toy_3bus_2node")."""
    path = Path(__file__).parent / "fixtures" / f"{name}.json"
    if not path.is_file():
        raise ScenarioError(name, "no such bundled fixture")
    return path


# ---------------------------------------------------------------------------
# Variants and overrides
# ---------------------------------------------------------------------------


def select_day(scenario: Scenario, day: str) -> Scenario:
    """Replace wind availability with a bundled day profile (winter, summer, annual)."""
    profiles = scenario.wind.profiles
    if day not in profiles:
        raise ScenarioError("wind.profiles", f"scenario has no '{day}' profile")
    return replace(scenario, wind=replace(scenario.wind, availability=profiles[day]))


def load_series_csv(path: Path | str, horizon: int | None = None) -> Series:
    """Read a ``slot,value`` CSV with slots 0..T−1, each exactly once."""
    where = str(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise ScenarioError(where, "series file not found")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ScenarioError(where, f"unreadable series CSV: {e}")
    frame.columns = [str(c).strip() for c in frame.columns]
    if list(frame.columns) != ["slot", "value"]:
        raise ScenarioError(where, "expected header 'slot,value'")
    slots = pd.to_numeric(frame["slot"], errors="coerce")
    values = pd.to_numeric(frame["value"], errors="coerce")
    if slots.isna().any() or values.isna().any():
        raise ScenarioError(where, "non-numeric slot or value")
    order = np.argsort(slots.to_numpy(), kind="stable")
    slots_sorted = slots.to_numpy()[order]
    if not np.array_equal(slots_sorted, np.arange(len(frame))):
        raise ScenarioError(where, "slots must be 0..T-1, each exactly once")
    out = tuple(float(v) for v in values.to_numpy()[order])
    if horizon is not None:
        _check_length(out, horizon, where)
    return out


def apply_series_override(scenario: Scenario, target: str, path: Path | str) -> Scenario:
    """Replace one series from a CSV file.

    Targets: ``wind.availability``, ``loads.<bus>``, ``gas_demands.<node>``,
    ``coal.mined``. The result is revalidated.
    """
    series = load_series_csv(path, scenario.horizon)
    head, _, tail = target.partition(".")
    if target == "wind.availability":
        return replace(scenario, wind=replace(scenario.wind, availability=series))
    if target == "coal.mined":
        if scenario.coal is None:
            raise ScenarioError(target, "scenario has no coal chain")
        return replace(scenario, coal=replace(scenario.coal, mined=series))
    if head in ("loads", "gas_demands") and tail:
        key = _key_id(tail, head)
        updated = dict(getattr(scenario, head))
        updated[key] = series
        return replace(scenario, **{head: updated})
    raise ScenarioError(target, "unknown override target")
