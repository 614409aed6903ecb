"""
Brute-force reference solvers for toy instances.

enumerate_uc tries every commitment pattern, grid_search_gas scans node
pressures on a grid under the exact Weymouth law, and mccormick_min evaluates
the bilinear envelope in closed form. None of them reuse the model builders,
so agreement with branch_and_bound is evidence rather than a restatement.
"""

import itertools
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ies.exceptions import InstanceTooLarge, ModelError
from ies.scenario import GasNetwork, Scenario, ThermalUnit

logger = logging.getLogger(__name__)

MAX_UC_BINARIES = 12
MAX_GAS_NODES = 3

_BISECT_ITERS = 200
_FEAS_TOL = 1e-9


# ---------------------------------------------------------------------------
# Unit commitment
# ---------------------------------------------------------------------------


@dataclass
class UcOracleResult:
    status: str
    objective: float = math.inf
    u: list[list[int]] = field(default_factory=list)
    P: list[list[float]] = field(default_factory=list)
    Pw: list[float] = field(default_factory=list)
    patterns: int = 0
    dispatched: int = 0
    message: str = ""


@dataclass(frozen=True)
class _Supplier:
    """A dispatchable source in one slot: cost k·(a·p² + b·p) on [lo, hi]."""

    lo: float
    hi: float
    a: float
    b: float
    k: float

    def at(self, lam: float) -> tuple[float, float]:
        """Output range minimizing cost − lam·p."""
        if self.k > 0 and self.a > 0:
            p = (lam / self.k - self.b) / (2.0 * self.a)
            p = min(self.hi, max(self.lo, p))
            return p, p
        slope = self.k * self.b
        if lam > slope:
            return self.hi, self.hi
        if lam < slope:
            return self.lo, self.lo
        return self.lo, self.hi


def _dispatch(suppliers: list[_Supplier], demand: float) -> list[float] | None:
    """Least-cost outputs meeting demand exactly, by bisection on the incremental cost."""
    if sum(s.lo for s in suppliers) > demand + _FEAS_TOL or sum(s.hi for s in suppliers) < demand - _FEAS_TOL:
        return None
    slopes = [s.k * (2 * s.a * p + s.b) for s in suppliers for p in (s.lo, s.hi)]
    lam_lo, lam_hi = min(slopes) - 1.0, max(slopes) + 1.0
    for _ in range(_BISECT_ITERS):
        lam = 0.5 * (lam_lo + lam_hi)
        ranges = [s.at(lam) for s in suppliers]
        if sum(r[0] for r in ranges) > demand:
            lam_hi = lam
        elif sum(r[1] for r in ranges) < demand:
            lam_lo = lam
        else:
            break
    ranges = [s.at(lam) for s in suppliers]
    out = [lo for lo, _ in ranges]
    rest = demand - sum(out)
    # suppliers indifferent at lam take the remainder first
    for i, (lo, hi) in enumerate(ranges):
        if rest <= 0:
            break
        take = min(rest, hi - lo)
        out[i] += take
        rest -= take
    # bisection rounding
    for i, s in enumerate(suppliers):
        if rest == 0:
            break
        take = min(rest, s.hi - out[i]) if rest > 0 else max(rest, s.lo - out[i])
        out[i] += take
        rest -= take
    if abs(rest) > 1e-7 * max(1.0, abs(demand)):
        return None
    return out


def _runs_ok(unit: ThermalUnit, row: tuple[int, ...]) -> bool:
    """Minimum up/down screening; a run cut short by the horizon is allowed."""
    T = len(row)
    prev = 1 if unit.initial_on else 0
    for t, on in enumerate(row):
        if on != prev:
            need = unit.min_up if on else unit.min_down
            end = min(T, t + need)
            if any(row[k] != on for k in range(t, end)):
                return False
        prev = on
    return True


def _switch_cost(unit: ThermalUnit, row: tuple[int, ...]) -> float:
    cost = 0.0
    prev = 1 if unit.initial_on else 0
    for on in row:
        if on > prev:
            cost += unit.start_cost
        elif on < prev:
            cost += unit.stop_cost
        prev = on
    return cost


def _check_uc_instance(scenario: Scenario) -> None:
    n = len(scenario.units) * scenario.horizon
    if n > MAX_UC_BINARIES:
        raise InstanceTooLarge(
            MAX_UC_BINARIES, n, f"{n} commitment binaries exceed the oracle limit of {MAX_UC_BINARIES}"
        )
    if len(scenario.power_net.buses) != 1:
        raise ModelError("enumerate_uc needs a single-bus scenario")
    if scenario.p2g is not None or scenario.coal is not None or scenario.gas_net.nodes:
        raise ModelError("enumerate_uc does not model gas or coupling devices")


class _UcEnumerator:
    def __init__(self, scenario: Scenario) -> None:
        self.sc = scenario
        self.T = scenario.horizon
        h = scenario.slot_hours
        self.wind_k = scenario.wind.delta_wp * scenario.power_net.kw_per_pu * h
        self.k = [unit.coal_price * h for unit in scenario.units]
        self.demand = [scenario.total_load(t) for t in range(self.T)]

    def _wind_floor(self, t: int, committed_cap: float) -> float:
        """Least wind that keeps Σ(u·P_max) − ΣP ≥ ρ·D with ΣP = D − Pw."""
        rho = self.sc.power_net.reserve_rho
        return max(0.0, self.demand[t] * (1.0 + rho) - committed_cap)

    def _slot(self, pattern, t: int):
        sc = self.sc
        on = [i for i, row in enumerate(pattern) if row[t]]
        cap = sum(sc.units[i].p_max for i in on)
        avail = sc.wind.availability[t]
        w_lo = self._wind_floor(t, cap)
        if w_lo > avail + _FEAS_TOL:
            return None
        suppliers = [
            _Supplier(sc.units[i].p_min, sc.units[i].p_max, sc.units[i].a, sc.units[i].b, self.k[i]) for i in on
        ]
        # curtailment cost δ·(avail − Pw) is linear with slope −δ per unit of wind used
        suppliers.append(_Supplier(min(w_lo, avail), avail, 0.0, -self.wind_k, 1.0))
        out = _dispatch(suppliers, self.demand[t])
        if out is None:
            return None
        P = [0.0] * len(sc.units)
        for i, p in zip(on, out):
            P[i] = p
        return P, out[-1]

    def _ramps_ok(self, pattern, P) -> bool:
        h = self.sc.slot_hours
        for i, unit in enumerate(self.sc.units):
            prev_on, prev_p = unit.initial_on, unit.initial_p
            for t in range(self.T):
                if pattern[i][t] and prev_on:
                    step = P[i][t] - prev_p
                    if step > unit.ramp_up * h + 1e-9 or -step > unit.ramp_down * h + 1e-9:
                        return False
                prev_on, prev_p = bool(pattern[i][t]), P[i][t]
        return True

    def _cost(self, pattern, P, Pw) -> float:
        total = 0.0
        for i, unit in enumerate(self.sc.units):
            total += _switch_cost(unit, pattern[i])
            for t in range(self.T):
                if pattern[i][t]:
                    total += self.k[i] * (unit.a * P[i][t] ** 2 + unit.b * P[i][t] + unit.c)
        avail = self.sc.wind.availability
        total += sum(self.wind_k * (avail[t] - Pw[t]) for t in range(self.T))
        return total

    def _fixed_cost(self, pattern) -> float:
        """Switching and no-load cost of a pattern; a lower bound on its total when b ≥ 0."""
        total = 0.0
        for i, unit in enumerate(self.sc.units):
            total += _switch_cost(unit, pattern[i])
            total += self.k[i] * unit.c * sum(pattern[i])
        return total

    def _ramped_dispatch(self, pattern, P0, Pw0):
        """Whole-horizon dispatch with ramp rows, for patterns where the slot-wise optimum breaks a ramp."""
        sc = self.sc
        T = self.T
        idx = [(i, t) for i in range(len(sc.units)) for t in range(T) if pattern[i][t]]
        n_p = len(idx)
        pos = {key: j for j, key in enumerate(idx)}
        avail = sc.wind.availability

        def split(z):
            return z[:n_p], z[n_p:]

        def objective(z):
            p, w = split(z)
            total = sum(self.k[i] * (sc.units[i].a * p[j] ** 2 + sc.units[i].b * p[j]) for j, (i, t) in enumerate(idx))
            return total - self.wind_k * float(np.sum(w))

        def balance(z):
            p, w = split(z)
            out = np.array(w, dtype=float) - np.array(self.demand)
            for j, (_, t) in enumerate(idx):
                out[t] += p[j]
            return out

        def inequalities(z):
            p, w = split(z)
            rows = []
            h = sc.slot_hours
            for i, unit in enumerate(sc.units):
                prev_on, prev = unit.initial_on, unit.initial_p
                for t in range(T):
                    if pattern[i][t]:
                        cur = p[pos[(i, t)]]
                        if prev_on:
                            rows.append(unit.ramp_up * h - (cur - prev))
                            rows.append(unit.ramp_down * h - (prev - cur))
                        prev_on, prev = True, cur
                    else:
                        prev_on, prev = False, 0.0
            for t in range(T):
                cap = sum(sc.units[i].p_max for i in range(len(sc.units)) if pattern[i][t])
                rows.append(w[t] - self._wind_floor(t, cap))
            return np.array(rows) if rows else np.zeros(1)

        bounds = [(sc.units[i].p_min, sc.units[i].p_max) for i, _ in idx] + [(0.0, a) for a in avail]
        z0 = np.array([P0[i][t] for i, t in idx] + list(Pw0), dtype=float)
        res = minimize(
            objective,
            z0,
            method="SLSQP",
            bounds=bounds,
            constraints=[{"type": "eq", "fun": balance}, {"type": "ineq", "fun": inequalities}],
            options={"ftol": 1e-12, "maxiter": 500},
        )
        if not res.success:
            return None
        if np.max(np.abs(balance(res.x))) > 1e-7 or np.min(inequalities(res.x)) < -1e-7:
            return None
        p, w = split(res.x)
        P = [[0.0] * T for _ in sc.units]
        for j, (i, t) in enumerate(idx):
            P[i][t] = float(p[j])
        return P, [float(v) for v in w]

    def run(self) -> UcOracleResult:
        sc = self.sc
        result = UcOracleResult(status="infeasible")
        rows_per_unit = [
            [row for row in itertools.product((0, 1), repeat=self.T) if _runs_ok(unit, row)] for unit in sc.units
        ]
        floor_ok = all(unit.b >= 0 for unit in sc.units)
        for pattern in itertools.product(*rows_per_unit):
            result.patterns += 1
            if floor_ok and self._fixed_cost(pattern) >= result.objective:
                continue
            slots = [self._slot(pattern, t) for t in range(self.T)]
            if any(s is None for s in slots):
                continue
            result.dispatched += 1
            P = [[slots[t][0][i] for t in range(self.T)] for i in range(len(sc.units))]
            Pw = [slots[t][1] for t in range(self.T)]
            if not self._ramps_ok(pattern, P):
                ramped = self._ramped_dispatch(pattern, P, Pw)
                if ramped is None:
                    continue
                P, Pw = ramped
            cost = self._cost(pattern, P, Pw)
            if cost < result.objective:
                result.status = "optimal"
                result.objective = cost
                result.u = [list(row) for row in pattern]
                result.P = P
                result.Pw = Pw
        result.message = f"{result.patterns} patterns, {result.dispatched} dispatched"
        logger.debug("enumerate_uc: %s", result.message)
        return result


def enumerate_uc(scenario: Scenario) -> UcOracleResult:
    """Exhaustive commitment search on a single-bus scenario with at most 12 binaries.

    Each pattern passing the minimum up/down screen gets an exact economic
    dispatch per slot; patterns whose dispatch breaks a ramp limit are
    re-dispatched over the whole horizon with SLSQP.
    """
    _check_uc_instance(scenario)
    return _UcEnumerator(scenario).run()


# ---------------------------------------------------------------------------
# Gas network
# ---------------------------------------------------------------------------


@dataclass
class GasOracleResult:
    status: str
    objective: float = math.inf
    pi: dict[int, float] = field(default_factory=dict)
    flow: list[float] = field(default_factory=list)
    supply: dict[int, float] = field(default_factory=dict)
    points: int = 0
    balance_tol: float = 0.0
    message: str = ""


def grid_search_gas(
    gas_net: GasNetwork,
    demands: Mapping[int, float],
    resolution: int = 41,
    balance_tol: float | None = None,
    injections: Mapping[int, float] | None = None,
) -> GasOracleResult:
    """Best steady state over a pressure grid under sign(f)·f² = C²·(π_m − π_n).

    Each node's π takes ``resolution`` evenly spaced values in its box; flows
    follow from the pressures, supplies from nodal balance. The objective is the
    per-hour source cost at each node's own price. Non-source nodes must balance
    within ``balance_tol`` (default: the largest flow change one grid step can
    cause, C·sqrt(step) summed over pipes).
    """
    nodes = list(gas_net.nodes)
    if len(nodes) > MAX_GAS_NODES:
        raise InstanceTooLarge(MAX_GAS_NODES, len(nodes), f"{len(nodes)} gas nodes exceed the oracle limit")
    if resolution < 2:
        raise ModelError("grid resolution must be at least 2")
    injections = injections or {}
    axes = [np.linspace(n.pi_lo, n.pi_hi, resolution) for n in nodes]
    grids = np.meshgrid(*axes, indexing="ij")
    pi = {n.id: g.ravel() for n, g in zip(nodes, grids)}
    if balance_tol is None:
        steps = {n.id: (n.pi_hi - n.pi_lo) / (resolution - 1) for n in nodes}
        balance_tol = sum(
            p.weymouth_c * math.sqrt(max(steps[p.from_node], steps[p.to_node])) for p in gas_net.pipes
        )

    size = resolution ** len(nodes)
    net_out = {n.id: np.zeros(size) for n in nodes}
    flows = []
    for pipe in gas_net.pipes:
        drop = pi[pipe.from_node] - pi[pipe.to_node]
        f = np.sign(drop) * pipe.weymouth_c * np.sqrt(np.abs(drop))
        flows.append(f)
        net_out[pipe.from_node] += f
        net_out[pipe.to_node] -= f

    feasible = np.ones(size, dtype=bool)
    cost = np.zeros(size)
    supply = {}
    for n in nodes:
        need = demands.get(n.id, 0.0) - injections.get(n.id, 0.0) + net_out[n.id]
        feasible &= need >= n.s_lo - balance_tol
        feasible &= need <= n.s_hi + balance_tol
        s = np.clip(need, n.s_lo, n.s_hi)
        supply[n.id] = s
        cost += s * gas_net.source_price(n)
    for pipe, f in zip(gas_net.pipes, flows):
        feasible &= np.abs(f) <= gas_net.flow_cap(pipe) + balance_tol

    result = GasOracleResult(status="infeasible", points=size, balance_tol=balance_tol)
    if not feasible.any():
        result.message = f"no grid point within balance tolerance {balance_tol:.3g}; refine the grid"
        logger.warning("grid_search_gas: %s", result.message)
        return result
    masked = np.where(feasible, cost, np.inf)
    best = int(np.argmin(masked))
    result.status = "optimal"
    result.objective = float(masked[best])
    result.pi = {n.id: float(pi[n.id][best]) for n in nodes}
    result.flow = [float(f[best]) for f in flows]
    result.supply = {n.id: float(supply[n.id][best]) for n in nodes}
    result.message = f"{int(feasible.sum())} of {size} grid points feasible"
    return result


# ---------------------------------------------------------------------------
# Bilinear envelope and cone form
# ---------------------------------------------------------------------------


def mccormick_min(
    x: float,
    pi_m: float,
    pi_n: float,
    box_m: tuple[float, float],
    box_n: tuple[float, float],
) -> float:
    """Smallest λ allowed by the envelope of λ = x·(π_m − π_n) at a fixed direction x.

    The two lower rows are λ ≥ (x + 1)·y_lo − d and λ ≥ (x − 1)·y_hi + d, with
    d = π_m − π_n and [y_lo, y_hi] the range of d over the boxes.
    """
    bounds = (*box_m, *box_n)
    if not all(math.isfinite(b) for b in bounds):
        raise ModelError("pressure boxes must be finite")
    d = pi_m - pi_n
    y_lo = box_m[0] - box_n[1]
    y_hi = box_m[1] - box_n[0]
    return max((x + 1.0) * y_lo - d, (x - 1.0) * y_hi + d)


def cone_form_holds(flow: float, c: float, lam: float) -> bool:
    """‖(2F/C, λ − 1)‖ ≤ λ + 1."""
    return math.hypot(2.0 * flow / c, lam - 1.0) <= lam + 1.0


def ratio_form_holds(flow: float, c: float, lam: float) -> bool:
    """(F/C)² ≤ λ."""
    return (flow / c) ** 2 <= lam
