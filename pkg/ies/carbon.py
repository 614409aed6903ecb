"""
Carbon accounting over a solved dispatch, and the truck-fleet comparison.

The ledger counts coal burned by the units, the gasification by-product and the
fleet's tailpipe or charging emissions as gross; methanation absorbs one m³ of
CO₂ per m³ of CH₄ and enters with a negative sign.
"""

import json
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import pandas as pd

from ies.constants import CO2_DENSITY_T_PER_M3, SCHEMA_VERSION
from ies.coupling import FLEETS
from ies.exceptions import IesException, ModelError
from ies.scenario import FleetParams, Scenario
from ies.storage import atomic_write_json, prepare_out_dir, write_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmissionFactors:
    """tCO₂ per unit of activity. Representative defaults; scenarios may override any key."""

    coal_gen: float = 1.9  # per ton of coal burned
    c2h_process: float = 1.8e-3  # per m³ H₂ from gasification
    methanation_sink: float = CO2_DENSITY_T_PER_M3  # absorbed per m³ CH₄
    diesel_truck: float = 8.0e-3  # per ton hauled
    ev_grid: float = 7.0e-4  # per kWh charged

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ModelError(f"emission factor {f.name} must be nonnegative")

    @classmethod
    def from_mapping(cls, data: Mapping[str, float] | None) -> "EmissionFactors":
        known = {f.name for f in fields(cls)}
        values = {}
        for key, value in (data or {}).items():
            if key not in known:
                raise ModelError(f"unknown emission factor {key!r}")
            values[key] = float(value)
        return cls(**values)


@dataclass
class CarbonLedger:
    gross: list[float]
    absorption: list[float]
    net: list[float]
    by_source: dict[str, float]
    carbon_price: float
    carbon_cost: float
    total_cost: float
    adjusted_total: float
    sign: int = 1

    @property
    def net_total(self) -> float:
        return sum(self.net)


def _truck_factor(fleet: str, factors: EmissionFactors, params: FleetParams) -> float:
    """tCO₂ per ton hauled."""
    if fleet == "diesel":
        return factors.diesel_truck
    if fleet == "ev":
        return params.ev_kwh_per_ton * factors.ev_grid
    return 0.0


def compute_ledger(
    solution,
    factors: EmissionFactors | None = None,
    carbon_price: float = 0.0,
    sign: int = 1,
    fleet_params: FleetParams | None = None,
) -> CarbonLedger:
    """Per-slot gross, absorption and net emissions plus the carbon-adjusted total.

    adjusted = total + sign·price·net; sign=+1 charges net emissions as a cost,
    sign=−1 reads the carbon term as revenue.
    """
    if sign not in (1, -1):
        raise ModelError("sign must be +1 or -1")
    if carbon_price < 0:
        raise ModelError("carbon price must be nonnegative")
    factors = factors or EmissionFactors()
    fleet_params = fleet_params or FleetParams()
    h = solution.slot_hours
    c = solution.coupling
    truck = _truck_factor(solution.fleet, factors, fleet_params)
    sources = {"coal_generation": 0.0, "gasification": 0.0, "trucks": 0.0, "methanation": 0.0}
    gross, absorption = [], []
    for t in range(solution.horizon):
        coal = sum(row[t] for row in solution.fuel_tons) * factors.coal_gen
        c2h = c.f_coal_h2[t] * h * factors.c2h_process
        trucks = c.trucked[t] * truck
        sink = c.f_ch4[t] * h * factors.methanation_sink
        sources["coal_generation"] += coal
        sources["gasification"] += c2h
        sources["trucks"] += trucks
        sources["methanation"] -= sink
        gross.append(coal + c2h + trucks)
        absorption.append(sink)
    net = [g - a for g, a in zip(gross, absorption)]
    carbon_cost = carbon_price * sum(net)
    total = solution.costs.total
    return CarbonLedger(
        gross=gross,
        absorption=absorption,
        net=net,
        by_source=sources,
        carbon_price=carbon_price,
        carbon_cost=carbon_cost,
        total_cost=total,
        adjusted_total=total + sign * carbon_cost,
        sign=sign,
    )


@dataclass
class FleetComparison:
    """Adjusted totals per fleet (rows) and carbon-price column; failed fleets stay NaN."""

    adjusted: pd.DataFrame
    prices: dict[str, float]
    totals: dict[str, float] = field(default_factory=dict)
    net_emissions: dict[str, float] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    def ordering_holds(self, column: str, order: tuple[str, ...] = FLEETS) -> bool:
        values = [self.adjusted.loc[f, column] for f in order]
        if any(not math.isfinite(v) for v in values):
            return False
        return all(a <= b for a, b in zip(values, values[1:]))


def compare_fleets(
    scenario: Scenario,
    prices: Mapping[str, float] | None = None,
    options=None,
    factors: EmissionFactors | None = None,
    sign: int = 1,
) -> FleetComparison:
    """Solve once per fleet and price the net emissions under each carbon price column.

    ``prices`` defaults to the scenario's ``prices.carbon_prices`` (in $/tCO₂).
    """
    from ies.runner import RunOptions, run

    prices = dict(scenario.prices.carbon_prices if prices is None else prices)
    if not prices:
        prices = {"carbon_price": scenario.prices.carbon_price}
    factors = factors or EmissionFactors.from_mapping(scenario.emissions)
    options = options or RunOptions()
    table = pd.DataFrame(math.nan, index=list(FLEETS), columns=list(prices), dtype=float)
    comparison = FleetComparison(adjusted=table, prices=prices)
    for fleet in FLEETS:
        try:
            solution = run(scenario, replace(options, fleet=fleet))
        except IesException as e:
            comparison.errors[fleet] = str(e)
            logger.warning("fleet %s failed: %s", fleet, e)
            continue
        comparison.totals[fleet] = solution.costs.total
        for column, price in prices.items():
            ledger = compute_ledger(solution, factors, price, sign, scenario.fleet)
            table.loc[fleet, column] = ledger.adjusted_total
            comparison.net_emissions[fleet] = ledger.net_total
    return comparison


def write_carbon_report(comparison: FleetComparison, out_dir: Path | str) -> tuple[Path, Path]:
    """Write carbon_report.csv (fleet × price) and carbon_report.json."""
    out_dir = prepare_out_dir(out_dir)
    csv_path = out_dir / "carbon_report.csv"
    frame = comparison.adjusted.copy()
    frame.index.name = "fleet"
    write_table(frame, csv_path, index=True)
    json_path = out_dir / "carbon_report.json"
    data = {
        "schema_version": SCHEMA_VERSION,
        "prices": comparison.prices,
        "adjusted": {
            fleet: {
                col: (None if math.isnan(v) else float(v)) for col, v in comparison.adjusted.loc[fleet].items()
            }
            for fleet in comparison.adjusted.index
        },
        "totals": comparison.totals,
        "net_emissions": comparison.net_emissions,
        "errors": comparison.errors,
    }
    atomic_write_json(json_path, data)
    return csv_path, json_path


def ledger_to_json(ledger: CarbonLedger) -> str:
    return json.dumps(
        {
            "gross": ledger.gross,
            "absorption": ledger.absorption,
            "net": ledger.net,
            "by_source": ledger.by_source,
            "carbon_price": ledger.carbon_price,
            "carbon_cost": ledger.carbon_cost,
            "total_cost": ledger.total_cost,
            "adjusted_total": ledger.adjusted_total,
        },
        sort_keys=True,
        indent=2,
    )
