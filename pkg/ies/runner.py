"""
Experiment harness: solve a scenario end to end and run the parameter sweeps.

run() returns a DispatchSolution with cost breakdown and diagnostics;
sweep_penalty, sweep_reserve and compare_p2g repeat run() over variants.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import pandas as pd

from ies.bnb import branch_and_bound
from ies.exceptions import IesException, ModelError, SolveFailed
from ies.gas import GasState, TightnessReport, measure_tightness
from ies.model import AssembledModel, assemble
from ies.scenario import Scenario, select_day
from ies.solver import SolveOptions, SolveResult

logger = logging.getLogger(__name__)

COST_TERMS = ("fuel", "start", "stop", "gas", "curtail", "truck", "coal_revenue", "slack")


@dataclass(frozen=True)
class RunOptions:
    """Variant switches for one run. None keeps the scenario's own value."""

    with_p2g: bool = True
    rho: float | None = None
    delta_wp: float | None = None
    day: str | None = None
    fleet: str = "hydrogen"
    hydrogen_slack_penalty: float | None = None
    solve: SolveOptions = field(default_factory=SolveOptions)
    tightness_tol: float = 1e-4


def prepare(scenario: Scenario, options: RunOptions) -> Scenario:
    """Apply day profile, reserve ρ and penalty δ overrides (revalidated)."""
    if options.day is not None:
        scenario = select_day(scenario, options.day)
    if options.rho is not None:
        scenario = replace(scenario, power_net=replace(scenario.power_net, reserve_rho=options.rho))
    if options.delta_wp is not None:
        scenario = replace(scenario, wind=replace(scenario.wind, delta_wp=options.delta_wp))
    return scenario


@dataclass
class CostBreakdown:
    """Cost terms in $. total = fuel + start + stop + gas + curtail + truck − coal_revenue + slack."""

    fuel: float = 0.0
    start: float = 0.0
    stop: float = 0.0
    gas: float = 0.0
    curtail: float = 0.0
    truck: float = 0.0
    coal_revenue: float = 0.0
    slack: float = 0.0
    total: float = 0.0

    def signed_terms(self) -> list[tuple[str, float]]:
        """Terms with the sign they carry in the total; they sum to total."""
        return [(k, -getattr(self, k) if k == "coal_revenue" else getattr(self, k)) for k in COST_TERMS]

    def additivity_residual(self) -> float:
        return abs(sum(v for _, v in self.signed_terms()) - self.total)


@dataclass
class CouplingState:
    f_h2: list[float]
    f_h2_prime: list[float]
    f_ch4: list[float]
    cons_h2: list[float]
    cons_ch4: list[float]
    f_coal_h2: list[float]
    f_truck_h2: list[float]
    beta: list[float]
    mined: list[float]
    gasified: list[float]
    trucked: list[float]
    h2_short: list[float]
    h2_surplus: list[float]


@dataclass
class DispatchSolution:
    """Solved dispatch with per-slot series, costs and solver metadata."""

    scenario_name: str
    horizon: int
    slot_hours: float
    kw_per_pu: float
    unit_ids: list[int]
    u: list[list[int]]
    P: list[list[float]]
    fuel_tons: list[list[float]]
    Pw: list[float]
    availability: list[float]
    curtailment: list[float]
    line_ends: list[tuple[int, int]]
    line_flow: list[list[float]]
    gas: GasState
    coupling: CouplingState
    costs: CostBreakdown
    tightness: TightnessReport
    status: str
    objective: float
    bound: float
    gap: float
    nodes: int
    cut_rounds: int
    counts: dict[str, int]
    with_p2g: bool
    fleet: str
    delta_wp: float
    rho: float
    message: str = ""

    @property
    def curtailed_kwh(self) -> float:
        return sum(self.curtailment) * self.kw_per_pu * self.slot_hours


def _values(result: SolveResult, row) -> list[float]:
    return [result.value(x) for x in row]


def _extract(model: AssembledModel, result: SolveResult, options: RunOptions) -> DispatchSolution:
    sc = model.scenario
    T = range(sc.horizon)
    uc, cv = model.uc, model.coupling
    u = [[int(round(result.value(x))) for x in row] for row in uc.u]
    P = [[result.value(uc.P[i][t]) if u[i][t] else 0.0 for t in T] for i in range(len(sc.units))]
    fuel_tons = [
        [unit.fuel_tons(P[i][t], u[i][t]) * sc.slot_hours for t in T] for i, unit in enumerate(sc.units)
    ]
    Pw = _values(result, uc.Pw)
    avail = list(sc.wind.availability)
    curtail = [max(0.0, a - w) for a, w in zip(avail, Pw)]

    chain = sc.coal
    mined = list(chain.mined) if chain is not None else [0.0] * sc.horizon
    beta = _values(result, cv.beta) if cv.beta else [0.0] * sc.horizon
    zeros = [0.0] * sc.horizon
    coupling = CouplingState(
        f_h2=_values(result, cv.f_h2) if cv.has_p2g else zeros,
        f_h2_prime=_values(result, cv.f_h2_prime) if cv.has_p2g else zeros,
        f_ch4=_values(result, cv.f_ch4) if cv.has_p2g else zeros,
        cons_h2=_values(result, cv.cons_h2) if cv.has_p2g else zeros,
        cons_ch4=_values(result, cv.cons_ch4) if cv.has_p2g else zeros,
        f_coal_h2=_values(result, cv.f_coal_h2),
        f_truck_h2=_values(result, cv.f_truck_h2),
        beta=beta,
        mined=mined,
        gasified=[b * m for b, m in zip(beta, mined)],
        trucked=[(1.0 - b) * m for b, m in zip(beta, mined)],
        h2_short=_values(result, cv.h2_short) if cv.h2_short else zeros,
        h2_surplus=_values(result, cv.h2_surplus) if cv.h2_surplus else zeros,
    )

    terms = {name: result.value(getattr(model.costs, name)) for name in COST_TERMS}
    costs = CostBreakdown(**terms, total=result.value(model.costs.total()))
    if abs(costs.total - result.objective) > options.solve.rel_gap_tol * max(1.0, abs(result.objective)):
        logger.warning(
            "cost breakdown total %.6f differs from solver objective %.6f", costs.total, result.objective
        )

    gas = GasState.from_result(sc.gas_net, model.gas, result)
    return DispatchSolution(
        scenario_name=sc.name,
        horizon=sc.horizon,
        slot_hours=sc.slot_hours,
        kw_per_pu=sc.power_net.kw_per_pu,
        unit_ids=[unit.id for unit in sc.units],
        u=u,
        P=P,
        fuel_tons=fuel_tons,
        Pw=Pw,
        availability=avail,
        curtailment=curtail,
        line_ends=[(line.from_bus, line.to_bus) for line in sc.power_net.lines],
        line_flow=[_values(result, row) for row in uc.Pl],
        gas=gas,
        coupling=coupling,
        costs=costs,
        tightness=measure_tightness(gas, options.tightness_tol),
        status=result.status,
        objective=result.objective,
        bound=result.bound,
        gap=result.gap,
        nodes=result.nodes,
        cut_rounds=result.cut_rounds,
        counts=model.program.counts(),
        with_p2g=model.with_p2g,
        fleet=model.fleet,
        delta_wp=sc.wind.delta_wp,
        rho=sc.power_net.reserve_rho,
        message=result.message,
    )


def run(scenario: Scenario, options: RunOptions | None = None) -> DispatchSolution:
    """Assemble, solve and extract. Raises SolveFailed when no feasible point was found."""
    options = options or RunOptions()
    prepared = prepare(scenario, options)
    model = assemble(
        prepared,
        with_p2g=options.with_p2g,
        fleet=options.fleet,
        hydrogen_slack_penalty=options.hydrogen_slack_penalty,
    )
    result = branch_and_bound(model.program, options.solve)
    if not result.has_solution:
        raise SolveFailed(result.status, f"{prepared.name}: {result.status} ({result.message})")
    solution = _extract(model, result, options)
    logger.info(
        "%s: %s total %.2f (gap %.2g, %d nodes)",
        prepared.name,
        solution.status,
        solution.costs.total,
        solution.gap,
        solution.nodes,
    )
    return solution


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _map(fn, jobs: list, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def _penalty_point(job: tuple[Scenario, float, float, RunOptions]) -> dict:
    scenario, delta, reference, options = job
    row = {"delta_wp": delta, "status": "", "decision_total": math.nan,
           "assessed_total": math.nan, "curtailed_kwh": math.nan, "error": ""}
    try:
        sol = run(scenario, replace(options, delta_wp=delta))
    except SolveFailed as e:
        row.update(status=e.status, error=e.message)
        return row
    except IesException as e:
        row.update(status="error", error=str(e))
        return row
    kwh = sol.curtailed_kwh
    row.update(
        status=sol.status,
        decision_total=sol.costs.total,
        assessed_total=sol.costs.total - sol.costs.curtail + reference * kwh,
        curtailed_kwh=kwh,
    )
    return row


def sweep_penalty(
    scenario: Scenario,
    deltas: list[float],
    options: RunOptions | None = None,
    reference_delta: float | None = None,
    workers: int = 1,
) -> pd.DataFrame:
    """One row per δ_WP.

    ``decision_total`` is the optimal cost at that δ. ``assessed_total`` keeps the
    same decisions and re-prices curtailment at ``reference_delta`` (default the
    scenario's δ_WP), so points are compared at one price. Failed points are
    recorded with their status and error; the sweep continues.
    """
    if not deltas:
        raise ModelError("sweep needs at least one δ value")
    if any(d < 0 for d in deltas):
        raise ModelError("δ values must be nonnegative")
    options = options or RunOptions()
    reference = scenario.wind.delta_wp if reference_delta is None else reference_delta
    jobs = [(scenario, float(d), reference, options) for d in deltas]
    return pd.DataFrame(_map(_penalty_point, jobs, workers))


def interior_minimum(table: pd.DataFrame, column: str = "assessed_total", key: str = "delta_wp") -> float | None:
    """Key of a strict minimum that is neither the first nor the last row, else None."""
    values = table[column].tolist()
    if len(values) < 3 or any(not math.isfinite(v) for v in values):
        return None
    best = min(range(len(values)), key=values.__getitem__)
    if best in (0, len(values) - 1):
        return None
    if sum(1 for v in values if v <= values[best]) > 1:
        return None
    return float(table[key].iloc[best])


def _reserve_point(job: tuple[Scenario, float, RunOptions]) -> dict:
    scenario, rho, options = job
    row = {"rho": rho, "status": "", "total": math.nan, "committed_units": math.nan, "error": ""}
    try:
        sol = run(scenario, replace(options, rho=rho))
    except SolveFailed as e:
        row.update(status=e.status, error=e.message)
        return row
    except IesException as e:
        row.update(status="error", error=str(e))
        return row
    row.update(status=sol.status, total=sol.costs.total, committed_units=sum(map(sum, sol.u)))
    return row


def sweep_reserve(
    scenario: Scenario,
    rhos: list[float],
    options: RunOptions | None = None,
    workers: int = 1,
) -> pd.DataFrame:
    """Total cost and committed unit-slots per hot-spare coefficient ρ."""
    if not rhos:
        raise ModelError("sweep needs at least one ρ value")
    options = options or RunOptions()
    return pd.DataFrame(_map(_reserve_point, [(scenario, float(r), options) for r in rhos], workers))


@dataclass
class P2GComparison:
    with_p2g: float
    without_p2g: float

    @property
    def reduction(self) -> float:
        return self.without_p2g - self.with_p2g

    @property
    def relative_reduction(self) -> float:
        return self.reduction / max(1.0, abs(self.without_p2g))

    def as_dict(self) -> dict[str, float]:
        return {**asdict(self), "reduction": self.reduction, "relative_reduction": self.relative_reduction}


def compare_p2g(scenario: Scenario, options: RunOptions | None = None) -> P2GComparison:
    """Solve with and without the P2G plant at the same tolerances."""
    options = options or RunOptions()
    with_sol = run(scenario, replace(options, with_p2g=True))
    without_sol = run(scenario, replace(options, with_p2g=False))
    comparison = P2GComparison(with_sol.costs.total, without_sol.costs.total)
    logger.info("P2G reduces total cost by %.2f%%", 100 * comparison.relative_reduction)
    return comparison
