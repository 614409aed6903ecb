"""
Power-side constraint builders: fuel cost, commitment logic, reserve, ramps,
minimum up/down times, start/stop costs and DC line flows.

Every builder is a pure function of the scenario data and variable handles and
returns a list of constraints; callers add them to the program.
"""

import logging
from dataclasses import dataclass, field

from ies.conic import Affine, Constraint, ConicProgram, Var, encode_quadratic_epigraph, eq, quicksum
from ies.scenario import Scenario, ThermalUnit

logger = logging.getLogger(__name__)


@dataclass
class UcVariables:
    """Variable handles indexed [unit position][slot], [bus id][slot] and [line position][slot]."""

    u: list[list[Var]]
    P: list[list[Var]]
    fcost: list[list[Var]]
    cu: list[list[Var]]
    cd: list[list[Var]]
    Pw: list[Var]
    theta: dict[int, list[Var]] = field(default_factory=dict)
    Pl: list[list[Var]] = field(default_factory=list)


def declare_uc_variables(prog: ConicProgram, scenario: Scenario) -> UcVariables:
    T = range(scenario.horizon)
    u, P, fcost, cu, cd = [], [], [], [], []
    for unit in scenario.units:
        u.append([prog.add_binary(f"u[{unit.id},{t}]") for t in T])
        P.append([prog.add_var(f"P[{unit.id},{t}]", 0.0, unit.p_max) for t in T])
        fcost.append([prog.add_var(f"fcost[{unit.id},{t}]") for t in T])
        cu.append([prog.add_var(f"cu[{unit.id},{t}]") for t in T])
        cd.append([prog.add_var(f"cd[{unit.id},{t}]") for t in T])
    Pw = [prog.add_var(f"Pw[{t}]", 0.0, scenario.wind.availability[t]) for t in T]
    net = scenario.power_net
    theta = {}
    for bus in net.buses:
        if bus == net.reference:
            theta[bus] = [prog.add_var(f"theta[{bus},{t}]", 0.0, 0.0) for t in T]
        else:
            theta[bus] = [prog.add_var(f"theta[{bus},{t}]", -float("inf"), float("inf")) for t in T]
    Pl = [
        [prog.add_var(f"Pl[{k},{t}]", line.p_min, line.p_max) for t in T]
        for k, line in enumerate(net.lines)
    ]
    return UcVariables(u=u, P=P, fcost=fcost, cu=cu, cd=cd, Pw=Pw, theta=theta, Pl=Pl)


def build_output_limits(unit: ThermalUnit, u: list[Var], P: list[Var]) -> list[Constraint]:
    """P_min·u ≤ P ≤ P_max·u, so an off unit produces nothing."""
    out: list[Constraint] = []
    for t, (ut, Pt) in enumerate(zip(u, P)):
        out.append((Pt - ut * unit.p_max <= 0).named(f"pmax[{unit.id},{t}]"))
        out.append((Pt - ut * unit.p_min >= 0).named(f"pmin[{unit.id},{t}]"))
    return out


def build_fuel_cost(unit: ThermalUnit, P: Var, u: Var, fcost: Var, slot_hours: float = 1.0) -> Constraint:
    """fcost ≥ coal_price·slot_hours·(a·P² + b·P + c·u), with fcost in $ per slot."""
    k = unit.coal_price * slot_hours
    if k == 0:
        # Free coal: nothing to price, tons are recovered from P afterwards.
        return eq(fcost, 0.0)
    return encode_quadratic_epigraph(unit.a, unit.b, unit.c, P, u, fcost / k)


def _p2g_pu(p2g_load_kw: list[Affine] | None, t: int, kw_per_pu: float):
    if p2g_load_kw is None:
        return 0.0
    return p2g_load_kw[t] / kw_per_pu


def build_balance(
    scenario: Scenario,
    uc: UcVariables,
    p2g_load_kw: list[Affine] | None = None,
) -> list[Constraint]:
    """System balance per slot plus DC nodal balance per bus.

    ``p2g_load_kw`` is the P2G electric consumption (kW) per slot, drawn at the
    plant's bus.
    """
    net = scenario.power_net
    kw = net.kw_per_pu
    p2g_bus = scenario.p2g.bus if scenario.p2g is not None else None
    out: list[Constraint] = []
    for t in range(scenario.horizon):
        supply = quicksum(P[t] for P in uc.P) + uc.Pw[t] - _p2g_pu(p2g_load_kw, t, kw)
        out.append(eq(supply, scenario.total_load(t)).named(f"balance[{t}]"))
        for bus in net.buses:
            inject = quicksum(
                uc.P[i][t] for i, unit in enumerate(scenario.units) if unit.bus == bus
            )
            if bus == scenario.wind.bus:
                inject = inject + uc.Pw[t]
            if bus == p2g_bus:
                inject = inject - _p2g_pu(p2g_load_kw, t, kw)
            flow_out = quicksum(
                uc.Pl[k][t] for k, line in enumerate(net.lines) if line.from_bus == bus
            ) - quicksum(uc.Pl[k][t] for k, line in enumerate(net.lines) if line.to_bus == bus)
            out.append(eq(inject - flow_out, scenario.bus_load(bus, t)).named(f"nodal[{bus},{t}]"))
    return out


def build_reserve(scenario: Scenario, uc: UcVariables) -> list[Constraint]:
    """Σ_i (u·P_max − P) ≥ ρ·D_t per slot."""
    rho = scenario.power_net.reserve_rho
    out: list[Constraint] = []
    for t in range(scenario.horizon):
        headroom = quicksum(
            uc.u[i][t] * unit.p_max - uc.P[i][t] for i, unit in enumerate(scenario.units)
        )
        out.append((headroom >= rho * scenario.total_load(t)).named(f"reserve[{t}]"))
    return out


def commitment_floor(scenario: Scenario, t: int) -> int:
    """Fewest units whose largest capacities can cover reserve plus the load wind cannot serve."""
    net = scenario.power_net
    demand = scenario.total_load(t)
    wind_bus = scenario.wind.bus
    usable_wind = min(
        scenario.wind.availability[t],
        scenario.bus_load(wind_bus, t) + net.export_capacity(wind_bus),
    )
    need = net.reserve_rho * demand + max(0.0, demand - usable_wind)
    if need <= 0:
        return 0
    covered = 0.0
    caps = sorted((unit.p_max for unit in scenario.units), reverse=True)
    for k, cap in enumerate(caps, start=1):
        covered += cap
        if covered >= need:
            return k
    return len(caps)


def build_commitment_cover(scenario: Scenario, uc: UcVariables) -> list[Constraint]:
    """Σ_i u[i,t] ≥ commitment_floor(t); valid for every feasible schedule."""
    out: list[Constraint] = []
    for t in range(scenario.horizon):
        k = commitment_floor(scenario, t)
        if k > 0:
            out.append((quicksum(u[t] for u in uc.u) >= k).named(f"cover[{t}]"))
    return out


def _previous(unit: ThermalUnit, u: list[Var], P: list[Var], t: int):
    if t == 0:
        return (1.0 if unit.initial_on else 0.0), unit.initial_p
    return u[t - 1], P[t - 1]


def build_ramp(unit: ThermalUnit, u: list[Var], P: list[Var], slot_hours: float = 1.0) -> list[Constraint]:
    """Ramp limits between consecutive on-slots; relaxed by P_max at a start or stop.

    Slot 0 is measured against the initial state.
    """
    r_up = unit.ramp_up * slot_hours
    r_down = unit.ramp_down * slot_hours
    out: list[Constraint] = []
    for t in range(len(P)):
        u_prev, P_prev = _previous(unit, u, P, t)
        # P_t − P_{t−1} ≤ R_u + P_max(1 − u_{t−1})
        out.append(
            (P[t] - P_prev + u_prev * unit.p_max <= r_up + unit.p_max).named(f"ramp_up[{unit.id},{t}]")
        )
        # P_{t−1} − P_t ≤ R_d + P_max(1 − u_t)
        out.append(
            (P_prev - P[t] + u[t] * unit.p_max <= r_down + unit.p_max).named(f"ramp_down[{unit.id},{t}]")
        )
    return out


def build_min_updown(unit: ThermalUnit, u: list[Var]) -> list[Constraint]:
    """Minimum stop (TS) and start (TO) durations; windows are truncated at the horizon."""
    T = len(u)
    out: list[Constraint] = []
    for t in range(T):
        u_prev = (1.0 if unit.initial_on else 0.0) if t == 0 else u[t - 1]
        down_len = min(unit.min_down, T - t)
        if down_len > 1:
            off_slots = quicksum(1.0 - u[k] for k in range(t, t + down_len))
            out.append((off_slots - (u_prev - u[t]) * down_len >= 0).named(f"min_down[{unit.id},{t}]"))
        up_len = min(unit.min_up, T - t)
        if up_len > 1:
            on_slots = quicksum(u[k] for k in range(t, t + up_len))
            out.append((on_slots - (u[t] - u_prev) * up_len >= 0).named(f"min_up[{unit.id},{t}]"))
    return out


def build_startstop_costs(
    unit: ThermalUnit, u: list[Var], cu: list[Var], cd: list[Var]
) -> tuple[list[Constraint], Affine]:
    """cu ≥ H·(u_t − u_{t−1}), cd ≥ J·(u_{t−1} − u_t); returns rows and Σ(cu + cd)."""
    out: list[Constraint] = []
    for t in range(len(u)):
        u_prev = (1.0 if unit.initial_on else 0.0) if t == 0 else u[t - 1]
        out.append((cu[t] - (u[t] - u_prev) * unit.start_cost >= 0).named(f"start[{unit.id},{t}]"))
        out.append((cd[t] - (u_prev - u[t]) * unit.stop_cost >= 0).named(f"stop[{unit.id},{t}]"))
    return out, quicksum(cu) + quicksum(cd)


def build_line_flows(scenario: Scenario, uc: UcVariables) -> list[Constraint]:
    """DC flow law Pl = (θ_from − θ_to)/x; flow limits sit on the Pl bounds."""
    out: list[Constraint] = []
    for k, line in enumerate(scenario.power_net.lines):
        for t in range(scenario.horizon):
            angle = uc.theta[line.from_bus][t] - uc.theta[line.to_bus][t]
            out.append(eq(uc.Pl[k][t] * line.x - angle, 0.0).named(f"flow[{k},{t}]"))
    return out


def build_power_side(
    prog: ConicProgram,
    scenario: Scenario,
    p2g_load_kw: list[Affine] | None = None,
) -> tuple[UcVariables, Affine, Affine]:
    """Declare UC variables, add every power constraint.

    Returns the variables, the fuel cost and the start/stop cost expressions.
    """
    uc = declare_uc_variables(prog, scenario)
    h = scenario.slot_hours
    startstop = Affine()
    for i, unit in enumerate(scenario.units):
        prog.add(build_output_limits(unit, uc.u[i], uc.P[i]))
        for t in range(scenario.horizon):
            prog.add(build_fuel_cost(unit, uc.P[i][t], uc.u[i][t], uc.fcost[i][t], h).named(f"fuel[{unit.id},{t}]"))
        prog.add(build_ramp(unit, uc.u[i], uc.P[i], h))
        prog.add(build_min_updown(unit, uc.u[i]))
        rows, cost = build_startstop_costs(unit, uc.u[i], uc.cu[i], uc.cd[i])
        prog.add(rows)
        startstop = startstop + cost
    prog.add(build_balance(scenario, uc, p2g_load_kw))
    prog.add(build_reserve(scenario, uc))
    prog.add(build_commitment_cover(scenario, uc))
    prog.add(build_line_flows(scenario, uc))
    fuel = quicksum(f for row in uc.fcost for f in row)
    logger.debug("power side: %d units, %d lines, T=%d", len(scenario.units), len(scenario.power_net.lines), scenario.horizon)
    return uc, fuel, startstop
