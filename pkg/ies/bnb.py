"""
Branch-and-bound over binary variables with the cone relaxation at every node.

Single worker and deterministic: node ids come from a counter, heap ties break on
insertion order, and branching ties break on the lowest variable id. Direction
pairs (f⁺, f⁻) are branched together, one child per flow direction.
"""

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ies.conic import ConicProgram
from ies.exceptions import SearchLimitExceeded, SolverError, _IesNodeInfeasible
from ies.limits import check_search_limits
from ies.solver import RelaxationResult, RelaxationSolver, SolveOptions, SolveResult, TreeNode, relative_gap

logger = logging.getLogger(__name__)

INT_TOL = 1e-6
_PSEUDO_EPS = 1e-6


@dataclass
class _Node:
    id: int
    parent: int
    depth: int
    bound: float
    lower: np.ndarray
    upper: np.ndarray
    # (variable, "down"|"up", fractional part at the parent) for pseudo-cost updates.
    branched: tuple[int, str, float] | None = None


@dataclass
class _PseudoCosts:
    down_sum: dict[int, float] = field(default_factory=dict)
    down_n: dict[int, int] = field(default_factory=dict)
    up_sum: dict[int, float] = field(default_factory=dict)
    up_n: dict[int, int] = field(default_factory=dict)

    def update(self, var: int, direction: str, frac: float, gain: float) -> None:
        step = frac if direction == "down" else 1.0 - frac
        if step <= INT_TOL:
            return
        sums, counts = (self.down_sum, self.down_n) if direction == "down" else (self.up_sum, self.up_n)
        sums[var] = sums.get(var, 0.0) + max(gain, 0.0) / step
        counts[var] = counts.get(var, 0) + 1

    def _estimate(self, sums: dict[int, float], counts: dict[int, int], var: int) -> float:
        if counts.get(var):
            return sums[var] / counts[var]
        if counts:
            return sum(sums.values()) / sum(counts.values())
        return 1.0

    def score(self, var: int, frac: float) -> float:
        down = self._estimate(self.down_sum, self.down_n, var) * frac
        up = self._estimate(self.up_sum, self.up_n, var) * (1.0 - frac)
        return max(down, _PSEUDO_EPS) * max(up, _PSEUDO_EPS)


class _Search:
    def __init__(self, prog: ConicProgram, options: SolveOptions) -> None:
        self.options = options
        self.relax = RelaxationSolver(prog, options)
        cp = self.relax.compiled
        self.binaries = [int(i) for i in cp.binaries]
        # A pair is represented by its plus variable; the minus variable is never branched alone.
        self.pair_minus = {plus: minus for plus, minus in cp.pairs}
        paired = set(self.pair_minus.values())
        self.decisions = [i for i in self.binaries if i not in paired]
        self.hints = {p.plus.index: p.hint for p in prog.pairs}
        self.pseudo = _PseudoCosts()
        self.incumbent_x: np.ndarray | None = None
        self.incumbent_obj = math.inf
        self.tree: list[TreeNode] = []
        self.pruned_bound = math.inf
        self.cut_rounds = 0
        self._seq = itertools.count()
        self._heap: list[tuple] = []

    # ----- queue -----

    def push(self, node: _Node) -> None:
        seq = next(self._seq)
        if self.options.node_order == "best-first":
            key = (node.bound, seq)
        else:
            key = (-seq,)
        heapq.heappush(self._heap, (key, node))

    def pop(self) -> _Node:
        return heapq.heappop(self._heap)[1]

    def open_bound(self) -> float:
        if self.options.node_order == "best-first" and self._heap:
            return self._heap[0][1].bound
        return min((entry[1].bound for entry in self._heap), default=math.inf)

    def global_gap(self) -> float:
        return relative_gap(self.incumbent_obj, min(self.open_bound(), self.pruned_bound))

    def close_on_gap(self) -> bool:
        """Prune every open node once the global gap is within rel_gap_tol."""
        if self.incumbent_x is None or not self._heap or self.global_gap() > self.options.rel_gap_tol:
            return False
        self.pruned_bound = min(self.pruned_bound, self.open_bound())
        logger.debug("global gap %.3g closed with %d open nodes", self.global_gap(), len(self._heap))
        self._heap.clear()
        return True

    # ----- pruning -----

    def cutoff(self) -> float:
        if self.incumbent_x is None:
            return math.inf
        return self.incumbent_obj - self.options.rel_gap_tol * max(1.0, abs(self.incumbent_obj))

    def prune(self, bound: float) -> bool:
        if bound >= self.cutoff():
            self.pruned_bound = min(self.pruned_bound, bound)
            return True
        return False

    def offer(self, x: np.ndarray, objective: float, source: str) -> None:
        if objective < self.incumbent_obj:
            snapped = x.copy()
            snapped[self.binaries] = np.round(snapped[self.binaries])
            self.incumbent_x = snapped
            self.incumbent_obj = objective
            logger.info("new incumbent %.6f from %s", objective, source)

    # ----- branching -----

    def fractional(self, x: np.ndarray, node: _Node) -> list[tuple[int, float]]:
        out = []
        for i in self.decisions:
            if node.lower[i] == node.upper[i]:
                continue
            v = float(x[i])
            frac = min(v - math.floor(v), math.ceil(v) - v)
            minus = self.pair_minus.get(i)
            if minus is not None:
                frac = max(frac, min(x[minus], 1.0 - x[minus]))
            if frac > INT_TOL:
                out.append((i, v - math.floor(v)))
        return out

    def choose(self, candidates: list[tuple[int, float]]) -> tuple[int, float]:
        if self.options.branching == "pseudo-cost":
            return min(candidates, key=lambda c: (-self.pseudo.score(c[0], c[1]), c[0]))
        return min(candidates, key=lambda c: (-min(c[1], 1.0 - c[1]), c[0]))

    def children(self, node: _Node, var: int, frac: float, bound: float) -> list[_Node]:
        out = []
        for direction, value in (("down", 0.0), ("up", 1.0)):
            lower, upper = node.lower.copy(), node.upper.copy()
            lower[var] = upper[var] = value
            minus = self.pair_minus.get(var)
            if minus is not None:
                lower[minus] = upper[minus] = 1.0 - value
            out.append(
                _Node(
                    id=-1,
                    parent=node.id,
                    depth=node.depth + 1,
                    bound=bound,
                    lower=lower,
                    upper=upper,
                    branched=(var, direction, frac),
                )
            )
        return out

    # ----- heuristic -----

    def round_and_polish(self, x: np.ndarray, node: _Node) -> None:
        """Fix every binary to a rounded value and solve the remaining convex program."""
        for mode in ("nearest", "ceil"):
            lower, upper = node.lower.copy(), node.upper.copy()
            for i in self.decisions:
                if lower[i] == upper[i]:
                    continue
                minus = self.pair_minus.get(i)
                hint = self.hints.get(i)
                if minus is not None and hint is not None:
                    value = 1.0 if hint.value(x) >= 0 else 0.0
                elif mode == "nearest":
                    value = float(np.clip(np.round(x[i]), lower[i], upper[i]))
                else:
                    value = float(np.clip(math.ceil(x[i] - INT_TOL), lower[i], upper[i]))
                lower[i] = upper[i] = value
                if minus is not None:
                    lower[minus] = upper[minus] = 1.0 - value
            try:
                rel = self.relax.solve(lower, upper)
            except _IesNodeInfeasible:
                logger.debug("rounding (%s) at node %d infeasible", mode, node.id)
                continue
            self.cut_rounds += rel.cut_rounds
            self.offer(rel.x, rel.objective, f"{mode} rounding at node {node.id}")
            return

    # ----- main loop -----

    def evaluate(self, node: _Node) -> RelaxationResult | None:
        try:
            rel = self.relax.solve(node.lower, node.upper)
        except _IesNodeInfeasible:
            return None
        except SolverError as e:
            raise SolverError(
                f"node {node.id} (depth {node.depth}): {e.message}", residual=e.residual
            ) from e
        self.cut_rounds += rel.cut_rounds
        return rel

    def run(self) -> SolveResult:
        cp = self.relax.compiled
        started = time.monotonic()
        ids = itertools.count()
        root = _Node(next(ids), -1, 0, -math.inf, cp.lb.copy(), cp.ub.copy())
        self.push(root)
        explored = 0
        status: str | None = None
        message = ""

        while self._heap:
            node = self.pop()
            if self.prune(node.bound):
                continue
            explored += 1
            rel = self.evaluate(node)
            if rel is None:
                self.tree.append(TreeNode(node.id, node.parent, node.depth, math.inf))
                logger.debug("node %d infeasible", node.id)
            else:
                bound = rel.objective
                self.tree.append(TreeNode(node.id, node.parent, node.depth, bound))
                if node.branched is not None:
                    var, direction, frac = node.branched
                    self.pseudo.update(var, direction, frac, bound - node.bound)
                logger.debug(
                    "node %d depth %d bound %.6f incumbent %.6f open %d",
                    node.id, node.depth, bound, self.incumbent_obj, len(self._heap),
                )
                if not self.prune(bound):
                    candidates = self.fractional(rel.x, node)
                    if not candidates:
                        self.offer(rel.x, bound, f"integral relaxation at node {node.id}")
                    else:
                        if explored == 1 or explored % self.options.heuristic_every == 0:
                            self.round_and_polish(rel.x, node)
                        if not self.prune(bound):
                            var, frac = self.choose(candidates)
                            for child in self.children(node, var, frac, bound):
                                child.id = next(ids)
                                self.push(child)
            self.close_on_gap()
            try:
                check_search_limits(explored, started, self.options.limits)
            except SearchLimitExceeded as e:
                if self._heap:
                    status = "node-limit" if e.limit == "max_nodes" else "time-limit"
                    message = e.message
                    break

        open_bound = self.open_bound()
        if status is None:
            if self.incumbent_x is None:
                return self._result("infeasible", explored, -math.inf, "no integer-feasible point")
            bound = min(self.incumbent_obj, self.pruned_bound)
            return self._result("optimal", explored, bound, "search tree exhausted")
        bound = min(open_bound, self.pruned_bound, self.incumbent_obj)
        if self.incumbent_x is not None:
            message = f"{message}; incumbent gap {relative_gap(self.incumbent_obj, bound):.3g}"
        return self._result(status, explored, bound, message)

    def _result(self, status: str, nodes: int, bound: float, message: str) -> SolveResult:
        x = self.incumbent_x
        logger.info("branch-and-bound %s after %d nodes: %s", status, nodes, message)
        return SolveResult(
            status=status,
            x=x,
            objective=self.incumbent_obj,
            bound=bound if status != "infeasible" else math.inf,
            nodes=nodes,
            cone_slack=self.relax.cone_slack(x) if x is not None else [],
            cut_rounds=self.cut_rounds,
            message=message,
            tree=list(self.tree),
        )


def branch_and_bound(prog: ConicProgram, options: SolveOptions | None = None) -> SolveResult:
    """
    Solve the MISOCP to rel_gap_tol.

    Statuses: ``optimal`` (global gap ≤ rel_gap_tol; open nodes left at that point
    are pruned in one sweep), ``node-limit`` / ``time-limit`` (a limit stopped the
    search; the incumbent, if any, is returned with its gap), ``infeasible``.
    ``gap-limit`` is never produced here: with pruning at rel_gap_tol a closed gap
    leaves no node that could still be branched.
    Subproblem failures are raised as SolverError with node context.
    """
    return _Search(prog, options or SolveOptions()).run()
