"""
Gas-side constraint builders.

The Weymouth equation sign(f)·f² = C²(π_m − π_n) is convexified in four steps:
pressure squares π = p², direction binaries with a big-M flow split, the
McCormick envelope of λ = (f⁺ − f⁻)(π_m − π_n), and the cone (F/C)² ≤ λ.
measure_tightness reports how far a solution sits from the cone boundary.
"""

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import networkx as nx

from ies.conic import Affine, ConeConstraint, Constraint, ConicProgram, Var, eq, quicksum
from ies.exceptions import ModelError

if TYPE_CHECKING:
    from ies.scenario import GasNetwork, GasPipe, Scenario
    from ies.solver import SolveResult

logger = logging.getLogger(__name__)


def substitute_pressure(p_lo: float, p_hi: float) -> tuple[float, float]:
    """Pressure bounds (bar) to pressure-square bounds (bar²)."""
    if p_lo < 0 or p_hi < 0:
        raise ModelError(f"negative pressure bound [{p_lo}, {p_hi}]")
    if p_lo > p_hi:
        raise ModelError(f"pressure bounds reversed [{p_lo}, {p_hi}]")
    return p_lo * p_lo, p_hi * p_hi


@dataclass
class GasVariables:
    """Handles keyed by node id (s, pi) or pipe position (flows, directions, λ), then slot."""

    s: dict[int, list[Var]] = field(default_factory=dict)
    pi: dict[int, list[Var]] = field(default_factory=dict)
    F: list[list[Var]] = field(default_factory=list)
    Fp: list[list[Var]] = field(default_factory=list)
    Fm: list[list[Var]] = field(default_factory=list)
    dplus: list[list[Var]] = field(default_factory=list)
    dminus: list[list[Var]] = field(default_factory=list)
    lam: list[list[Var]] = field(default_factory=list)

    def signed_flow(self, k: int, t: int) -> Affine:
        return self.Fp[k][t] - self.Fm[k][t]


def _lambda_cap(gas_net: "GasNetwork", pipe: "GasPipe") -> float:
    m, n = gas_net.node(pipe.from_node), gas_net.node(pipe.to_node)
    return max(m.pi_hi - n.pi_lo, n.pi_hi - m.pi_lo, 0.0)


def declare_gas_variables(prog: ConicProgram, gas_net: "GasNetwork", horizon: int) -> GasVariables:
    gv = GasVariables()
    T = range(horizon)
    for node in gas_net.nodes:
        if node.s_hi > 0 or node.s_lo != 0:
            gv.s[node.id] = [prog.add_var(f"s[{node.id},{t}]", node.s_lo, node.s_hi) for t in T]
        gv.pi[node.id] = [prog.add_var(f"pi[{node.id},{t}]", node.pi_lo, node.pi_hi) for t in T]
    for k, pipe in enumerate(gas_net.pipes):
        cap = gas_net.flow_cap(pipe)
        tag = f"{k}:{pipe.from_node}-{pipe.to_node}"
        gv.F.append([prog.add_var(f"F[{tag},{t}]", 0.0, cap) for t in T])
        gv.Fp.append([prog.add_var(f"Fp[{tag},{t}]", 0.0, cap) for t in T])
        gv.Fm.append([prog.add_var(f"Fm[{tag},{t}]", 0.0, cap) for t in T])
        gv.dplus.append([prog.add_binary(f"dplus[{tag},{t}]") for t in T])
        gv.dminus.append([prog.add_binary(f"dminus[{tag},{t}]") for t in T])
        gv.lam.append([prog.add_var(f"lam[{tag},{t}]", 0.0, _lambda_cap(gas_net, pipe)) for t in T])
    return gv


def build_nodal_balance(
    gas_net: "GasNetwork",
    gv: GasVariables,
    demands: Mapping[int, Sequence[float]],
    horizon: int,
    injections: Mapping[int, Sequence] | None = None,
) -> list[Constraint]:
    """Per node and slot: outflow − inflow = source − demand + injection."""
    injections = injections or {}
    out: list[Constraint] = []
    for node in gas_net.nodes:
        leaving = [k for k, p in enumerate(gas_net.pipes) if p.from_node == node.id]
        entering = [k for k, p in enumerate(gas_net.pipes) if p.to_node == node.id]
        for t in range(horizon):
            net_out = quicksum(gv.signed_flow(k, t) for k in leaving) - quicksum(
                gv.signed_flow(k, t) for k in entering
            )
            supply = gv.s[node.id][t] if node.id in gv.s else 0.0
            demand = demands[node.id][t] if node.id in demands else 0.0
            inject = injections[node.id][t] if node.id in injections else 0.0
            out.append(eq(net_out - supply - inject, -demand).named(f"gas_balance[{node.id},{t}]"))
    return out


def build_direction_vars(k: int, gv: GasVariables, f_max: float) -> list[Constraint]:
    """f⁺ + f⁻ = 1; F⁺ ≤ F_max·f⁺; F⁻ ≤ F_max·f⁻; F = F⁺ + F⁻."""
    out: list[Constraint] = []
    for t in range(len(gv.F[k])):
        dp, dm = gv.dplus[k][t], gv.dminus[k][t]
        out.append(eq(dp + dm, 1.0).named(f"direction[{k},{t}]"))
        out.append((gv.Fp[k][t] - dp * f_max <= 0).named(f"fplus_cap[{k},{t}]"))
        out.append((gv.Fm[k][t] - dm * f_max <= 0).named(f"fminus_cap[{k},{t}]"))
        out.append(eq(gv.F[k][t] - gv.Fp[k][t] - gv.Fm[k][t], 0.0).named(f"magnitude[{k},{t}]"))
    return out


def mccormick_rows(x, pi_m, pi_n, box_m: tuple[float, float], box_n: tuple[float, float]) -> list[tuple]:
    """The envelope of λ = x·(π_m − π_n) for x ∈ [−1, 1] as (lhs, sense) pairs, lhs compared with 0.

    Accepts numbers or affine expressions for x, π_m and π_n.
    """
    lo_m, hi_m = box_m
    lo_n, hi_n = box_n
    if not all(math.isfinite(v) for v in (lo_m, hi_m, lo_n, hi_n)):
        raise ModelError("McCormick envelope needs finite pressure-square boxes")
    y_lo = lo_m - hi_n
    y_hi = hi_m - lo_n
    delta = pi_m - pi_n
    return [
        # λ ≥ −Δ + (x + 1)·y_lo
        (-delta + (x + 1) * y_lo, ">="),
        # λ ≥ Δ + (x − 1)·y_hi
        (delta + (x - 1) * y_hi, ">="),
        # λ ≤ Δ + (x − 1)·y_lo
        (delta + (x - 1) * y_lo, "<="),
        # λ ≤ −Δ + (x + 1)·y_hi
        (-delta + (x + 1) * y_hi, "<="),
    ]


def build_mccormick(k: int, pipe: "GasPipe", gv: GasVariables, gas_net: "GasNetwork") -> list[Constraint]:
    """Exact for binary directions: with x = f⁺ − f⁻ fixed, λ = x·(π_m − π_n)."""
    m, n = gas_net.node(pipe.from_node), gas_net.node(pipe.to_node)
    out: list[Constraint] = []
    for t in range(len(gv.lam[k])):
        x = gv.dplus[k][t] - gv.dminus[k][t]
        lam = gv.lam[k][t]
        rows = mccormick_rows(
            x, gv.pi[m.id][t], gv.pi[n.id][t], (m.pi_lo, m.pi_hi), (n.pi_lo, n.pi_hi)
        )
        for j, (rhs, sense) in enumerate(rows):
            row = (lam - rhs >= 0) if sense == ">=" else (lam - rhs <= 0)
            out.append(row.named(f"mccormick{j}[{k},{t}]"))
    return out


def build_soc(k: int, pipe: "GasPipe", gv: GasVariables) -> list[Constraint]:
    """‖(2F/C, λ − 1)‖₂ ≤ λ + 1, i.e. (F/C)² ≤ λ."""
    c = pipe.weymouth_c
    out: list[Constraint] = []
    for t in range(len(gv.F[k])):
        F, lam = gv.F[k][t], gv.lam[k][t]
        out.append(
            ConeConstraint(rows=[F * (2.0 / c), lam - 1.0], bound=lam + 1.0).named(f"weymouth[{k},{t}]")
        )
    return out


def fix_bridge_directions(
    prog: ConicProgram,
    gas_net: "GasNetwork",
    gv: GasVariables,
    injection_nodes: set[int] | frozenset[int] = frozenset(),
) -> int:
    """Fix direction binaries on bridge pipes whose far side has no supply.

    Gas can only reach such a side through the bridge, so the direction is known.
    Returns the number of pipes fixed.
    """
    graph = nx.Graph()
    graph.add_nodes_from(n.id for n in gas_net.nodes)
    multiplicity: dict[frozenset, int] = {}
    for p in gas_net.pipes:
        key = frozenset((p.from_node, p.to_node))
        multiplicity[key] = multiplicity.get(key, 0) + 1
        graph.add_edge(p.from_node, p.to_node)
    bridges = {frozenset(e) for e in nx.bridges(graph) if multiplicity[frozenset(e)] == 1}

    def supplied(side: set[int]) -> bool:
        return any(
            gas_net.node(i).s_hi > 0 or i in injection_nodes for i in side
        )

    fixed = 0
    for k, pipe in enumerate(gas_net.pipes):
        if frozenset((pipe.from_node, pipe.to_node)) not in bridges:
            continue
        cut = graph.copy()
        cut.remove_edge(pipe.from_node, pipe.to_node)
        to_side = nx.node_connected_component(cut, pipe.to_node)
        from_side = nx.node_connected_component(cut, pipe.from_node)
        if not supplied(to_side):
            forward = 1.0
        elif not supplied(from_side):
            forward = 0.0
        else:
            continue
        for t in range(len(gv.dplus[k])):
            prog.fix(gv.dplus[k][t], forward)
            prog.fix(gv.dminus[k][t], 1.0 - forward)
        fixed += 1
    logger.debug("fixed directions on %d of %d pipes", fixed, len(gas_net.pipes))
    return fixed


def build_gas_side(
    prog: ConicProgram,
    scenario: "Scenario",
    injections: Mapping[int, Sequence] | None = None,
) -> tuple[GasVariables, Affine]:
    """Declare gas variables and add every gas constraint; returns variables and source cost ($)."""
    gas_net = scenario.gas_net
    gv = declare_gas_variables(prog, gas_net, scenario.horizon)
    prog.add(build_nodal_balance(gas_net, gv, scenario.gas_demands, scenario.horizon, injections))
    for k, pipe in enumerate(gas_net.pipes):
        prog.add(build_direction_vars(k, gv, gas_net.flow_cap(pipe)))
        prog.add(build_mccormick(k, pipe, gv, gas_net))
        prog.add(build_soc(k, pipe, gv))
        for t in range(scenario.horizon):
            prog.pair_binaries(gv.dplus[k][t], gv.dminus[k][t], hint=gv.signed_flow(k, t))
    fix_bridge_directions(prog, gas_net, gv, set((injections or {}).keys()))
    cost = quicksum(
        gv.s[node.id][t] * (gas_net.source_price(node) * scenario.slot_hours)
        for node in gas_net.nodes
        if node.id in gv.s
        for t in range(scenario.horizon)
    )
    return gv, cost


# ---------------------------------------------------------------------------
# Solution state and tightness
# ---------------------------------------------------------------------------


@dataclass
class GasState:
    """Gas part of a solved dispatch; flows are magnitudes, direction is +1 (from→to) or −1."""

    pipes: list[tuple[int, int]]
    weymouth_c: list[float]
    s: dict[int, list[float]]
    pi: dict[int, list[float]]
    F: list[list[float]]
    direction: list[list[int]]
    lam: list[list[float]]

    @classmethod
    def from_result(cls, gas_net: "GasNetwork", gv: GasVariables, result: "SolveResult") -> "GasState":
        v = result.value
        return cls(
            pipes=[(p.from_node, p.to_node) for p in gas_net.pipes],
            weymouth_c=[p.weymouth_c for p in gas_net.pipes],
            s={i: [v(x) for x in row] for i, row in gv.s.items()},
            pi={i: [v(x) for x in row] for i, row in gv.pi.items()},
            F=[[v(x) for x in row] for row in gv.F],
            direction=[[1 if v(x) >= 0.5 else -1 for x in row] for row in gv.dplus],
            lam=[[v(x) for x in row] for row in gv.lam],
        )

    def signed_flow(self, k: int, t: int) -> float:
        return self.direction[k][t] * self.F[k][t]


@dataclass
class TightnessEntry:
    pipe: int
    from_node: int
    to_node: int
    slot: int
    flow: float
    lam: float
    residual: float
    relative: float


@dataclass
class TightnessReport:
    entries: list[TightnessEntry] = field(default_factory=list)
    tol: float = 1e-4

    @property
    def max_relative(self) -> float:
        return max((e.relative for e in self.entries), default=0.0)

    @property
    def mean_relative(self) -> float:
        if not self.entries:
            return 0.0
        return sum(e.relative for e in self.entries) / len(self.entries)

    @property
    def loose(self) -> list[TightnessEntry]:
        """Entries whose relative residual exceeds tol; equal to the absolute residual when λ <= 1."""
        return [e for e in self.entries if e.relative > self.tol]


def measure_tightness(state: GasState, tol: float = 1e-4) -> TightnessReport:
    """
    Residual r = λ − (F/C)² per pipe and slot; relative residual r / max(1, λ).

    An entry is loose when its relative residual exceeds *tol*. λ is a squared
    pressure, so the absolute residual scales with it.
    """
    report = TightnessReport(tol=tol)
    for k, (m, n) in enumerate(state.pipes):
        c = state.weymouth_c[k]
        for t, (flow, lam) in enumerate(zip(state.F[k], state.lam[k])):
            residual = lam - (flow / c) ** 2
            report.entries.append(
                TightnessEntry(k, m, n, t, flow, lam, residual, residual / max(1.0, abs(lam)))
            )
    if report.loose:
        logger.warning(
            "Weymouth relaxation loose on %d of %d pipe-slots (max relative residual %.3g)",
            len(report.loose),
            len(report.entries),
            report.max_relative,
        )
    return report
