"""
Write a solved dispatch to its output directory.

Six files per run: costs.csv (signed cost terms that sum to the total),
unit_output.csv (one row per unit and slot), gas_state.csv, coupling.csv,
tightness.csv and summary.json.
"""

import logging
import math
from pathlib import Path
from typing import Any

import pandas as pd

from ies.constants import SCHEMA_VERSION
from ies.runner import DispatchSolution
from ies.storage import (
    COSTS_CSV,
    COUPLING_CSV,
    GAS_STATE_CSV,
    SUMMARY_JSON,
    TIGHTNESS_CSV,
    UNIT_OUTPUT_CSV,
    atomic_write_json,
    prepare_out_dir,
    write_table,
)

logger = logging.getLogger(__name__)


def _clean(value: float) -> float | None:
    """JSON has no NaN; -0.0 would make otherwise identical runs differ."""
    if value is None or not math.isfinite(value):
        return None
    return float(value) + 0.0


def costs_frame(solution: DispatchSolution) -> pd.DataFrame:
    return pd.DataFrame(solution.costs.signed_terms(), columns=["term", "value"])


def unit_output_frame(solution: DispatchSolution) -> pd.DataFrame:
    rows = []
    mw_per_pu = solution.kw_per_pu / 1000.0
    for i, unit_id in enumerate(solution.unit_ids):
        for t in range(solution.horizon):
            rows.append(
                {
                    "unit": unit_id,
                    "slot": t,
                    "u": solution.u[i][t],
                    "P": solution.P[i][t],
                    "P_mw": solution.P[i][t] * mw_per_pu,
                    "fuel_tons": solution.fuel_tons[i][t],
                }
            )
    return pd.DataFrame(rows, columns=["unit", "slot", "u", "P", "P_mw", "fuel_tons"])


_GAS_COLUMNS = ["element", "id", "from_node", "to_node", "slot", "supply", "pressure", "flow", "direction", "lam"]


def gas_state_frame(solution: DispatchSolution) -> pd.DataFrame:
    """Node rows carry supply and pressure; pipe rows carry flow magnitude, direction and λ."""
    gas = solution.gas
    rows = []
    for node_id in sorted(gas.pi):
        for t, pi in enumerate(gas.pi[node_id]):
            supply = gas.s[node_id][t] if node_id in gas.s else 0.0
            rows.append({"element": "node", "id": node_id, "slot": t, "supply": supply, "pressure": pi})
    for k, (m, n) in enumerate(gas.pipes):
        for t in range(solution.horizon):
            rows.append(
                {
                    "element": "pipe",
                    "id": k,
                    "from_node": m,
                    "to_node": n,
                    "slot": t,
                    "flow": gas.F[k][t],
                    "direction": gas.direction[k][t],
                    "lam": gas.lam[k][t],
                }
            )
    return pd.DataFrame(rows, columns=_GAS_COLUMNS)


def coupling_frame(solution: DispatchSolution) -> pd.DataFrame:
    c = solution.coupling
    return pd.DataFrame(
        {
            "slot": range(solution.horizon),
            "availability": solution.availability,
            "Pw": solution.Pw,
            "curtailment": solution.curtailment,
            "f_h2": c.f_h2,
            "f_h2_prime": c.f_h2_prime,
            "f_ch4": c.f_ch4,
            "cons_h2": c.cons_h2,
            "cons_ch4": c.cons_ch4,
            "f_coal_h2": c.f_coal_h2,
            "f_truck_h2": c.f_truck_h2,
            "h2_short": c.h2_short,
            "h2_surplus": c.h2_surplus,
            "beta": c.beta,
            "mined": c.mined,
            "gasified": c.gasified,
            "trucked": c.trucked,
        }
    )


def tightness_frame(solution: DispatchSolution) -> pd.DataFrame:
    columns = ["pipe", "from_node", "to_node", "slot", "flow", "lam", "residual", "relative"]
    rows = [
        [e.pipe, e.from_node, e.to_node, e.slot, e.flow, e.lam, e.residual, e.relative]
        for e in solution.tightness.entries
    ]
    return pd.DataFrame(rows, columns=columns)


def summary_dict(solution: DispatchSolution, feas_tol: float | None = None) -> dict[str, Any]:
    """Contents of summary.json."""
    tight = solution.tightness
    data: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "scenario": solution.scenario_name,
        "status": solution.status,
        "objective": _clean(solution.objective),
        "bound": _clean(solution.bound),
        "gap": _clean(solution.gap),
        "nodes": solution.nodes,
        "cut_rounds": solution.cut_rounds,
        "counts": dict(solution.counts),
        "costs": {k: _clean(v) for k, v in solution.costs.signed_terms()},
        "total": _clean(solution.costs.total),
        "with_p2g": solution.with_p2g,
        "fleet": solution.fleet,
        "delta_wp": solution.delta_wp,
        "rho": solution.rho,
        "horizon": solution.horizon,
        "slot_hours": solution.slot_hours,
        "kw_per_pu": solution.kw_per_pu,
        "units": list(solution.unit_ids),
        "curtailed_kwh": _clean(solution.curtailed_kwh),
        "tightness": {
            "tol": tight.tol,
            "max_relative": _clean(tight.max_relative),
            "mean_relative": _clean(tight.mean_relative),
            "loose": len(tight.loose),
        },
        "message": solution.message,
    }
    if feas_tol is not None:
        data["feas_tol"] = feas_tol
    return data


def report(solution: DispatchSolution, out_dir: Path | str, feas_tol: float | None = None) -> list[Path]:
    """Write the six run files into out_dir and return their paths."""
    out = prepare_out_dir(out_dir)
    tables = (
        (COSTS_CSV, costs_frame(solution)),
        (UNIT_OUTPUT_CSV, unit_output_frame(solution)),
        (GAS_STATE_CSV, gas_state_frame(solution)),
        (COUPLING_CSV, coupling_frame(solution)),
        (TIGHTNESS_CSV, tightness_frame(solution)),
    )
    paths = []
    for name, frame in tables:
        write_table(frame, out / name)
        paths.append(out / name)
    atomic_write_json(out / SUMMARY_JSON, summary_dict(solution, feas_tol))
    paths.append(out / SUMMARY_JSON)
    logger.info("wrote %d files to %s", len(paths), out)
    return paths


def write_sweep(table: pd.DataFrame, out_dir: Path | str, name: str) -> Path:
    out = prepare_out_dir(out_dir)
    path = out / name
    write_table(table, path)
    return path
