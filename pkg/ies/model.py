"""Assemble the full MISOCP from the power, gas and coupling builders."""

import logging
from dataclasses import dataclass

from ies.conic import Affine, ConicProgram, quicksum
from ies.coupling import CouplingVariables, build_coupling_side
from ies.gas import GasVariables, build_gas_side
from ies.power import UcVariables, build_power_side
from ies.scenario import Scenario

logger = logging.getLogger(__name__)


@dataclass
class CostTerms:
    """Objective pieces as affine expressions ($ over the horizon)."""

    fuel: Affine
    start: Affine
    stop: Affine
    gas: Affine
    curtail: Affine
    truck: Affine
    coal_revenue: Affine
    slack: Affine

    def total(self) -> Affine:
        return (
            self.fuel + self.start + self.stop + self.gas + self.curtail + self.truck
            - self.coal_revenue + self.slack
        )


@dataclass
class AssembledModel:
    program: ConicProgram
    scenario: Scenario
    uc: UcVariables
    gas: GasVariables
    coupling: CouplingVariables
    costs: CostTerms
    with_p2g: bool
    fleet: str


def curtailment_cost(scenario: Scenario, uc: UcVariables, delta_wp: float | None = None) -> Affine:
    """δ·(availability − Pw) in kWh, summed over slots."""
    delta = scenario.wind.delta_wp if delta_wp is None else delta_wp
    kwh = scenario.power_net.kw_per_pu * scenario.slot_hours
    return quicksum(
        (scenario.wind.availability[t] - uc.Pw[t]) * (delta * kwh) for t in range(scenario.horizon)
    )


def assemble(
    scenario: Scenario,
    *,
    with_p2g: bool = True,
    fleet: str = "hydrogen",
    hydrogen_slack_penalty: float | None = None,
) -> AssembledModel:
    """
    Build the day-ahead program.

    with_p2g=False drops the P2G plant (its variables, its electric load and its
    methane injection) but keeps coal gasification, so truck hydrogen stays
    feasible.
    """
    prog = ConicProgram(name=scenario.name)
    coupling, ccosts = build_coupling_side(
        prog,
        scenario,
        with_p2g=with_p2g,
        fleet=fleet,
        hydrogen_slack_penalty=hydrogen_slack_penalty,
    )
    injections = None
    if coupling.has_p2g:
        injections = {scenario.p2g.gas_node: coupling.f_ch4}
    uc, fuel, _ = build_power_side(prog, scenario, coupling.p2g_load_kw())
    gas, source_cost = build_gas_side(prog, scenario, injections)

    costs = CostTerms(
        fuel=fuel,
        start=quicksum(c for row in uc.cu for c in row),
        stop=quicksum(c for row in uc.cd for c in row),
        gas=source_cost + ccosts.methanation,
        curtail=curtailment_cost(scenario, uc),
        truck=ccosts.truck,
        coal_revenue=ccosts.coal_revenue,
        slack=ccosts.slack,
    )
    prog.minimize(costs.total())
    prog.validate()
    logger.info(
        "assembled %s (p2g=%s, fleet=%s): %s",
        scenario.name,
        coupling.has_p2g,
        fleet,
        ", ".join(f"{k}={v}" for k, v in prog.counts().items()),
    )
    return AssembledModel(prog, scenario, uc, gas, coupling, costs, coupling.has_p2g, fleet)
