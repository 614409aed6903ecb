"""
Continuous relaxation solver: LP outer approximation of second-order cones.

Each cone ‖A x + b‖ ≤ c·x + d is replaced by linear cuts. The LP (HiGHS through
``scipy.optimize.linprog``) is re-solved and every violated cone receives a
supporting hyperplane at the LP point until all violations are within feas_tol.
Every cut is valid for the cone itself, so the LP optimum is a lower bound at
every round and the cut pool can be shared by all nodes of a search.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ies.config import BRANCHING_RULES, NODE_ORDERS
from ies.conic import Affine, CompiledProgram, ConicProgram, Var
from ies.exceptions import ModelError, SolverError, _IesNodeInfeasible
from ies.limits import SearchLimits

logger = logging.getLogger(__name__)

# LP status codes from scipy.optimize.linprog.
_LP_OPTIMAL = 0
_LP_INFEASIBLE = 2
_LP_UNBOUNDED = 3

# Two cuts are the same hyperplane when their unit normals and scaled rhs agree this closely.
_PARALLEL_COS = 1.0 - 1e-9
_RHS_TOL = 1e-9


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances, limits and search strategy for the conic solver."""

    rel_gap_tol: float = 1e-4
    feas_tol: float = 1e-6
    max_nodes: int | None = 5000
    time_limit_s: float | None = None
    branching: str = "most-fractional"
    node_order: str = "best-first"
    max_cut_rounds: int = 400
    heuristic_every: int = 25
    # Separated cuts kept between solves; seed cuts are not counted.
    max_cut_pool: int = 20_000

    def __post_init__(self) -> None:
        if not (self.rel_gap_tol > 0 and self.feas_tol > 0):
            raise ModelError("tolerances must be positive")
        if self.branching not in BRANCHING_RULES:
            raise ModelError(f"unknown branching rule {self.branching!r}; expected one of {BRANCHING_RULES}")
        if self.node_order not in NODE_ORDERS:
            raise ModelError(f"unknown node order {self.node_order!r}; expected one of {NODE_ORDERS}")
        if self.max_cut_rounds < 1:
            raise ModelError("max_cut_rounds must be at least 1")
        if self.heuristic_every < 1:
            raise ModelError("heuristic_every must be at least 1")
        if self.max_cut_pool < 1:
            raise ModelError("max_cut_pool must be at least 1")

    @property
    def limits(self) -> SearchLimits:
        return SearchLimits(max_nodes=self.max_nodes, time_limit_s=self.time_limit_s)


class TreeNode(NamedTuple):
    node: int
    parent: int
    depth: int
    bound: float


def relative_gap(objective: float, bound: float) -> float:
    """(objective − bound) / max(1, |objective|); inf without an incumbent."""
    if not math.isfinite(objective):
        return math.inf
    if not math.isfinite(bound):
        return math.inf if bound < objective else 0.0
    return max(0.0, objective - bound) / max(1.0, abs(objective))


@dataclass
class SolveResult:
    """Outcome of solve_relaxation or branch_and_bound.

    ``cone_slack`` is t − ‖y‖ per cone at ``x`` (negative values are violations).
    """

    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int = 0
    cone_slack: list[float] = field(default_factory=list)
    cut_rounds: int = 0
    message: str = ""
    tree: list[TreeNode] = field(default_factory=list)

    @property
    def has_solution(self) -> bool:
        return self.x is not None

    @property
    def gap(self) -> float:
        return relative_gap(self.objective, self.bound)

    def value(self, expr) -> float:
        if self.x is None:
            raise ModelError(f"no primal point (status {self.status})")
        if isinstance(expr, (Var, Affine)):
            return expr.value(self.x)
        return float(expr)


@dataclass
class RelaxationResult:
    x: np.ndarray
    objective: float
    cut_rounds: int
    violation: float


class RelaxationSolver:
    """Solves the continuous relaxation under per-node variable bounds."""

    def __init__(self, program: ConicProgram | CompiledProgram, options: SolveOptions | None = None) -> None:
        self.compiled = program.compile() if isinstance(program, ConicProgram) else program
        self.options = options or SolveOptions()
        cp = self.compiled
        self.lp_solves = 0

        # All cone rows stacked: y = A_all x + b_all; t_k = C_all[k] x + d_all[k].
        if cp.cones:
            self._A_all = sparse.vstack([k.A for k in cp.cones], format="csr")
            self._b_all = np.concatenate([k.b for k in cp.cones])
            self._C_all = sparse.vstack([k.c for k in cp.cones], format="csr")
            self._d_all = np.array([k.d for k in cp.cones])
            sizes = np.array([k.A.shape[0] for k in cp.cones])
        else:
            self._A_all = sparse.csr_matrix((0, cp.n))
            self._b_all = np.zeros(0)
            self._C_all = sparse.csr_matrix((0, cp.n))
            self._d_all = np.zeros(0)
            sizes = np.zeros(0, dtype=int)
        self._starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int) if len(sizes) else sizes
        self._owner = np.repeat(np.arange(len(sizes)), sizes)

        self._cuts = sparse.csr_matrix((0, cp.n))
        self._cut_rhs = np.zeros(0)
        self._cut_norms = np.zeros(0)
        self.duplicate_cuts = 0
        self._seed_cuts()
        self._seeded = self.pool_size

    @property
    def pool_size(self) -> int:
        return self._cuts.shape[0]

    def _seed_cuts(self) -> None:
        """±y_i ≤ t for every cone row."""
        if not self._A_all.shape[0]:
            return
        C_rows = self._C_all[self._owner]
        d_rows = self._d_all[self._owner]
        upper = self._A_all - C_rows
        lower = -self._A_all - C_rows
        self._append(
            sparse.vstack([upper, lower], format="csr"),
            np.concatenate([d_rows - self._b_all, d_rows + self._b_all]),
        )

    def _append(self, rows: sparse.csr_matrix, rhs: np.ndarray) -> None:
        norms = np.sqrt(np.asarray(rows.multiply(rows).sum(axis=1)).ravel())
        self._cuts = sparse.vstack([self._cuts, rows], format="csr")
        self._cut_rhs = np.concatenate([self._cut_rhs, rhs])
        self._cut_norms = np.concatenate([self._cut_norms, norms])

    def _novel(self, rows: sparse.csr_matrix, rhs: np.ndarray) -> np.ndarray:
        """Mask of rows that are not a scaled copy of a pooled cut."""
        keep = np.ones(rows.shape[0], dtype=bool)
        if not self.pool_size or not rows.shape[0]:
            return keep
        norms = np.sqrt(np.asarray(rows.multiply(rows).sum(axis=1)).ravel())
        live = norms > 0
        if not live.any():
            return keep
        pool_norms = np.where(self._cut_norms > 0, self._cut_norms, np.inf)
        cos = (rows[np.flatnonzero(live)] @ self._cuts.T).toarray() / np.outer(norms[live], pool_norms)
        r_new = rhs[live] / norms[live]
        r_old = self._cut_rhs / pool_norms
        close = np.abs(r_new[:, None] - r_old[None, :]) <= _RHS_TOL * np.maximum(1.0, np.abs(r_new))[:, None]
        keep[live] = ~np.any((cos >= _PARALLEL_COS) & close, axis=1)
        return keep

    def _add_cuts(self, rows: sparse.csr_matrix, rhs: np.ndarray) -> int:
        """Append the rows that are new to the pool; return how many were added."""
        keep = self._novel(rows, rhs)
        if not keep.any():
            # All duplicates: append anyway so the round still adds a cut.
            keep[:] = True
        dropped = int((~keep).sum())
        if dropped:
            self.duplicate_cuts += dropped
            logger.debug("skipped %d duplicate cone cuts", dropped)
            rows, rhs = rows[np.flatnonzero(keep)], rhs[keep]
        self._append(rows, rhs)
        return rows.shape[0]

    def _trim_pool(self) -> None:
        """Evict the oldest separated cuts beyond max_cut_pool."""
        excess = self.pool_size - self._seeded - self.options.max_cut_pool
        if excess <= 0:
            return
        keep = np.r_[0 : self._seeded, self._seeded + excess : self.pool_size]
        self._cuts = self._cuts[keep]
        self._cut_rhs = self._cut_rhs[keep]
        self._cut_norms = self._cut_norms[keep]
        logger.debug("cut pool trimmed by %d rows to %d", excess, self.pool_size)

    def cone_values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-cone ‖y‖ and t at x."""
        if not len(self._d_all):
            return np.zeros(0), np.zeros(0)
        y = self._A_all @ x + self._b_all
        norms = np.sqrt(np.add.reduceat(y * y, self._starts))
        t = self._C_all @ x + self._d_all
        return norms, t

    def cone_slack(self, x: np.ndarray) -> list[float]:
        norms, t = self.cone_values(x)
        return [float(v) for v in t - norms]

    def _separate(self, x: np.ndarray) -> float:
        """Add cuts for violated cones; return the largest scaled violation."""
        norms, t = self.cone_values(x)
        if not len(norms):
            return 0.0
        scaled = (norms - t) / np.maximum(1.0, np.abs(t))
        violated = np.flatnonzero(scaled > self.options.feas_tol)
        if not len(violated):
            return float(max(scaled.max(), 0.0))

        y = self._A_all @ x + self._b_all
        degenerate = violated[norms[violated] <= 1e-12]
        regular = violated[norms[violated] > 1e-12]

        pieces, rhs = [], []
        if len(regular):
            mask = np.isin(self._owner, regular)
            row_idx = np.flatnonzero(mask)
            owner = self._owner[row_idx]
            cut_of_row = np.searchsorted(regular, owner)
            g = y[row_idx] / norms[owner]
            G = sparse.csr_matrix((g, (cut_of_row, row_idx)), shape=(len(regular), len(y)))
            pieces.append(G @ self._A_all - self._C_all[regular])
            rhs.append(self._d_all[regular] - G @ self._b_all)
        if len(degenerate):
            # y = 0 and t < 0: t ≥ 0.
            pieces.append(-self._C_all[degenerate])
            rhs.append(self._d_all[degenerate])
        self._add_cuts(sparse.vstack(pieces, format="csr"), np.concatenate(rhs))
        return float(scaled.max())

    def _lp(self, lower: np.ndarray, upper: np.ndarray):
        cp = self.compiled
        A_ub = sparse.vstack([cp.A_ub, self._cuts], format="csr")
        b_ub = np.concatenate([cp.b_ub, self._cut_rhs])
        self.lp_solves += 1
        return linprog(
            cp.c,
            A_ub=A_ub if A_ub.shape[0] else None,
            b_ub=b_ub if A_ub.shape[0] else None,
            A_eq=cp.A_eq if cp.A_eq.shape[0] else None,
            b_eq=cp.b_eq if cp.A_eq.shape[0] else None,
            bounds=np.column_stack([lower, upper]),
            method="highs",
        )

    def solve(self, lower: np.ndarray | None = None, upper: np.ndarray | None = None) -> RelaxationResult:
        """Raise _IesNodeInfeasible when the bounded relaxation has no point."""
        cp = self.compiled
        lower = cp.lb if lower is None else lower
        upper = cp.ub if upper is None else upper
        if np.any(lower > upper):
            raise _IesNodeInfeasible("empty variable box")
        self._trim_pool()
        worst = math.inf
        for rounds in range(1, self.options.max_cut_rounds + 1):
            res = self._lp(lower, upper)
            if res.status == _LP_INFEASIBLE:
                raise _IesNodeInfeasible(res.message)
            if res.status == _LP_UNBOUNDED:
                raise SolverError("relaxation unbounded: objective has no lower bound", residual=None)
            if res.status != _LP_OPTIMAL:
                raise SolverError(f"LP solver failed ({res.message})", residual=float(res.status))
            x = np.asarray(res.x, dtype=float)
            worst = self._separate(x)
            if worst <= self.options.feas_tol:
                return RelaxationResult(x, float(res.fun) + cp.c0, rounds, worst)
        raise SolverError(
            f"cone violation {worst:.3g} remains after {self.options.max_cut_rounds} cut rounds",
            residual=worst,
        )


def solve_relaxation(
    prog: ConicProgram,
    options: SolveOptions | None = None,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> SolveResult:
    """Solve the program with binaries relaxed to their bounds."""
    solver = RelaxationSolver(prog, options)
    try:
        rel = solver.solve(lower, upper)
    except _IesNodeInfeasible as e:
        return SolveResult("infeasible", None, math.inf, math.inf, nodes=1, message=str(e))
    return SolveResult(
        status="optimal",
        x=rel.x,
        objective=rel.objective,
        bound=rel.objective,
        nodes=1,
        cone_slack=solver.cone_slack(rel.x),
        cut_rounds=rel.cut_rounds,
        message=f"converged after {rel.cut_rounds} cut rounds",
    )
