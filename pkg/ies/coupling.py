"""
Coal-district coupling: coal gasification (C2H), truck hydrogen demand, P2G
electrolysis and methanation, flammability checks and calorific accounting.

Flows are rates (m³/h); electric consumption is in kW. Series given per slot
(coal mined, tons) are divided by slot_hours to become rates.
"""

import logging
from dataclasses import dataclass, field

from ies.conic import Affine, Constraint, ConicProgram, Var, eq, quicksum
from ies.constants import H2_PER_CH4
from ies.exceptions import ModelError
from ies.scenario import FleetParams, P2GPlant, SafetyLimits, Scenario

logger = logging.getLogger(__name__)

FLEETS = ("hydrogen", "ev", "diesel")
SAFETY_MODES = ("exclusion", "inclusion")
SPECIES = ("h2", "ch4")


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_inputs(M, beta, alpha) -> None:
    for name, value in (("M", M), ("alpha", alpha)):
        if _is_number(value) and value < 0:
            raise ModelError(f"{name} must be nonnegative, got {value}")
    if _is_number(beta) and not 0.0 <= beta <= 1.0:
        raise ModelError(f"beta must lie in [0, 1], got {beta}")


def c2h_output(M, beta, alpha):
    """Hydrogen from gasifying the share β of coal M: α·β·M."""
    _check_inputs(M, beta, alpha)
    if _is_number(beta):
        return alpha * beta * M
    return beta * (alpha * M)


def truck_demand(M, beta, alpha):
    """Hydrogen burned hauling the ungasified share: α·(1 − β)·M."""
    _check_inputs(M, beta, alpha)
    if _is_number(beta):
        return alpha * (1.0 - beta) * M
    return (1.0 - beta) * (alpha * M)


@dataclass
class CouplingVariables:
    """Per-slot handles. P2G lists are empty without a plant, β is empty without coal."""

    f_h2: list[Var] = field(default_factory=list)
    f_h2_prime: list[Var] = field(default_factory=list)
    f_ch4: list[Var] = field(default_factory=list)
    cons_h2: list[Var] = field(default_factory=list)
    cons_ch4: list[Var] = field(default_factory=list)
    f_coal_h2: list[Var] = field(default_factory=list)
    f_truck_h2: list[Var] = field(default_factory=list)
    beta: list[Var] = field(default_factory=list)
    h2_short: list[Var] = field(default_factory=list)
    h2_surplus: list[Var] = field(default_factory=list)

    @property
    def has_p2g(self) -> bool:
        return bool(self.f_ch4)

    def p2g_load_kw(self) -> list[Affine] | None:
        if not self.has_p2g:
            return None
        return [self.cons_h2[t] + self.cons_ch4[t] for t in range(len(self.cons_h2))]


def declare_coupling_variables(
    prog: ConicProgram,
    scenario: Scenario,
    *,
    with_p2g: bool = True,
    slack: bool = False,
) -> CouplingVariables:
    v = CouplingVariables()
    T = range(scenario.horizon)
    plant = scenario.p2g
    if with_p2g and plant is not None:
        v.f_h2 = [prog.add_var(f"f_h2[{t}]", 0.0, plant.f_h2_max) for t in T]
        v.f_h2_prime = [prog.add_var(f"f_h2_prime[{t}]") for t in T]
        v.f_ch4 = [prog.add_var(f"f_ch4[{t}]", 0.0, plant.f_ch4_max) for t in T]
        v.cons_h2 = [prog.add_var(f"cons_h2[{t}]") for t in T]
        v.cons_ch4 = [prog.add_var(f"cons_ch4[{t}]") for t in T]
    v.f_coal_h2 = [prog.add_var(f"f_coal_h2[{t}]") for t in T]
    v.f_truck_h2 = [prog.add_var(f"f_truck_h2[{t}]") for t in T]
    if scenario.coal is not None:
        v.beta = [prog.add_var(f"beta[{t}]", 0.0, 1.0) for t in T]
    if slack:
        v.h2_short = [prog.add_var(f"h2_short[{t}]") for t in T]
        v.h2_surplus = [prog.add_var(f"h2_surplus[{t}]") for t in T]
    return v


def build_coal_chain(v: CouplingVariables, scenario: Scenario, fleet: str = "hydrogen") -> list[Constraint]:
    """Tie C2H output and truck demand to β; no coal chain means neither exists."""
    if fleet not in FLEETS:
        raise ModelError(f"unknown fleet {fleet!r}; expected one of {FLEETS}")
    chain = scenario.coal
    h = scenario.slot_hours
    out: list[Constraint] = []
    for t in range(scenario.horizon):
        if chain is None:
            out.append(eq(v.f_coal_h2[t], 0.0).named(f"c2h[{t}]"))
            out.append(eq(v.f_truck_h2[t], 0.0).named(f"truck_h2[{t}]"))
            continue
        rate = chain.mined[t] / h
        out.append(eq(v.f_coal_h2[t] - c2h_output(rate, v.beta[t], chain.alpha_coal[t]), 0.0).named(f"c2h[{t}]"))
        if fleet == "hydrogen":
            demand = truck_demand(rate, v.beta[t], chain.alpha_truck[t])
            out.append(eq(v.f_truck_h2[t] - demand, 0.0).named(f"truck_h2[{t}]"))
        else:
            out.append(eq(v.f_truck_h2[t], 0.0).named(f"truck_h2[{t}]"))
    return out


def build_hydrogen_balance(
    v: CouplingVariables, slack_penalty: float | None = None
) -> tuple[list[Constraint], Affine]:
    """f_h2 + f_coal_h2 = f_truck_h2 per slot (no storage).

    With ``slack_penalty`` set and slack variables declared, shortage and surplus
    enter the balance and are priced at slack_penalty ($/m³) in the returned cost.
    """
    out: list[Constraint] = []
    cost = Affine()
    slack = slack_penalty is not None and bool(v.h2_short)
    for t in range(len(v.f_truck_h2)):
        supply = v.f_coal_h2[t] + (v.f_h2[t] if v.has_p2g else 0.0)
        if slack:
            supply = supply + v.h2_short[t] - v.h2_surplus[t]
            cost = cost + (v.h2_short[t] + v.h2_surplus[t]) * slack_penalty
        out.append(eq(supply - v.f_truck_h2[t], 0.0).named(f"h2_balance[{t}]"))
    return out, cost


def p2g_consumption(v: CouplingVariables, plant: P2GPlant) -> list[Constraint]:
    """Electric consumption of both paths and the 4:1 H₂/CH₄ methanation ratio.

    α values are divided by the slot's efficiency: cons_h2 = α_h2/η_e·f_h2 and
    cons_ch4 = (4·α_ch4_elec/η_e + α_ch4_meth/η_m)·f_ch4.
    """
    out: list[Constraint] = []
    for t in range(len(v.f_ch4)):
        out.append(eq(v.cons_h2[t] - v.f_h2[t] * plant.h2_kwh_per_m3(t), 0.0).named(f"cons_h2[{t}]"))
        out.append(eq(v.cons_ch4[t] - v.f_ch4[t] * plant.ch4_kwh_per_m3(t), 0.0).named(f"cons_ch4[{t}]"))
        out.append(eq(v.f_h2_prime[t] - v.f_ch4[t] * H2_PER_CH4, 0.0).named(f"stoich[{t}]"))
    return out


@dataclass
class CouplingCosts:
    """Objective pieces contributed by the coupling side ($)."""

    truck: Affine = field(default_factory=Affine)
    coal_revenue: Affine = field(default_factory=Affine)
    methanation: Affine = field(default_factory=Affine)
    slack: Affine = field(default_factory=Affine)


def fleet_energy_cost(fleet: str, params: FleetParams) -> float:
    """Energy cost of hauling one ton with a non-hydrogen fleet ($/ton)."""
    if fleet == "ev":
        return params.ev_kwh_per_ton * params.ev_tariff
    if fleet == "diesel":
        return params.diesel_l_per_ton * params.diesel_price
    return 0.0


def trucked_tons(scenario: Scenario, v: CouplingVariables, t: int):
    """(1 − β)·M for slot t (tons per slot)."""
    if scenario.coal is None:
        return 0.0
    return (1.0 - v.beta[t]) * scenario.coal.mined[t]


def build_coupling_side(
    prog: ConicProgram,
    scenario: Scenario,
    *,
    with_p2g: bool = True,
    fleet: str = "hydrogen",
    hydrogen_slack_penalty: float | None = None,
) -> tuple[CouplingVariables, CouplingCosts]:
    """Declare coupling variables and add C2H, truck, hydrogen-balance and P2G rows."""
    v = declare_coupling_variables(
        prog, scenario, with_p2g=with_p2g, slack=hydrogen_slack_penalty is not None
    )
    prog.add(build_coal_chain(v, scenario, fleet))
    rows, slack_cost = build_hydrogen_balance(v, hydrogen_slack_penalty)
    prog.add(rows)
    costs = CouplingCosts(slack=slack_cost)
    if v.has_p2g:
        plant = scenario.p2g
        prog.add(p2g_consumption(v, plant))
        costs.methanation = quicksum(f * (plant.methanation_om * scenario.slot_hours) for f in v.f_ch4)
    if scenario.coal is not None:
        per_ton = scenario.prices.truck_cost_coeff + fleet_energy_cost(fleet, scenario.fleet)
        costs.truck = quicksum(trucked_tons(scenario, v, t) * per_ton for t in range(scenario.horizon))
        costs.coal_revenue = quicksum(
            trucked_tons(scenario, v, t) * scenario.prices.coal_sale_price for t in range(scenario.horizon)
        )
    return v, costs


# ---------------------------------------------------------------------------
# Safety and calorific checks
# ---------------------------------------------------------------------------


@dataclass
class SafetyViolation:
    species: str
    window: str
    lower: float
    upper: float
    value: float

    def __str__(self) -> str:
        return f"{self.species} at {self.value}% inside {self.window} [{self.lower}, {self.upper}]"


def _windows(limits: SafetyLimits, species: str) -> list[tuple[str, float, float]]:
    if species == "h2":
        return [("flammable", limits.lfl_h2, limits.ufl_h2), ("explosive", limits.lel_h2, limits.uel_h2)]
    return [("flammable", limits.lfl_ch4, limits.ufl_ch4), ("explosive", limits.lel_ch4, limits.uel_ch4)]


def check_safety(
    c_h2: float | None,
    c_ch4: float | None,
    limits: SafetyLimits | None = None,
    mode: str = "exclusion",
) -> list[SafetyViolation]:
    """Check volume-% concentrations against flammable and explosive windows.

    ``exclusion`` (default) flags a concentration inside a window; ``inclusion``
    flags one outside it. A None concentration is not checked.
    """
    if mode not in SAFETY_MODES:
        raise ModelError(f"unknown safety mode {mode!r}; expected one of {SAFETY_MODES}")
    limits = limits or SafetyLimits()
    violations = []
    for species, value in (("h2", c_h2), ("ch4", c_ch4)):
        if value is None:
            continue
        if not 0.0 <= value <= 100.0:
            raise ModelError(f"{species} concentration {value} outside [0, 100] vol-%")
        for window, lo, hi in _windows(limits, species):
            inside = lo <= value <= hi
            if inside == (mode == "exclusion"):
                violations.append(SafetyViolation(species, window, lo, hi, value))
    return violations


def energy_content(mass_kg: float, species: str, limits: SafetyLimits | None = None) -> float:
    """Lower heating energy (MJ) of mass_kg of h2 or ch4."""
    if species not in SPECIES:
        raise ModelError(f"unknown species {species!r}; expected one of {SPECIES}")
    if mass_kg < 0:
        raise ModelError(f"mass must be nonnegative, got {mass_kg}")
    limits = limits or SafetyLimits()
    q = limits.q_h2 if species == "h2" else limits.q_ch4
    return mass_kg * q
