"""ies: day-ahead MISOCP dispatch for integrated electric-gas systems in coal districts."""

from ies.bnb import branch_and_bound
from ies.exceptions import (
    InstanceTooLarge,
    ModelError,
    ScenarioError,
    SolveFailed,
    SolverError,
)
from ies.model import assemble
from ies.report import report
from ies.runner import RunOptions, compare_p2g, run, sweep_penalty, sweep_reserve
from ies.scenario import Scenario, bundled_fixture, load_scenario
from ies.solver import SolveOptions, SolveResult

try:
    from ies._version import version as __version__
except ImportError:
    # No version file was generated; use dev default
    __version__ = "0.0.0dev+default"

__all__ = [
    "InstanceTooLarge",
    "ModelError",
    "RunOptions",
    "Scenario",
    "ScenarioError",
    "SolveFailed",
    "SolveOptions",
    "SolveResult",
    "SolverError",
    "assemble",
    "branch_and_bound",
    "bundled_fixture",
    "compare_p2g",
    "load_scenario",
    "report",
    "run",
    "sweep_penalty",
    "sweep_reserve",
    "__version__",
]
