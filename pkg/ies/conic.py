"""
Solver-facing intermediate representation of a mixed-integer second-order-cone program.

Builders create variables on a ConicProgram and combine them with ordinary arithmetic
into Affine expressions; comparisons (``<=``, ``>=``) and ``eq`` produce linear
constraints. Cones are ``‖(y_1, ..., y_k)‖₂ ≤ t`` with every y_i and t affine.
"""

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy import sparse

from ies.constants import default_counts
from ies.exceptions import ModelError

logger = logging.getLogger(__name__)

CONTINUOUS = "C"
BINARY = "B"


class Var:
    """Handle to a declared variable. Arithmetic yields Affine expressions."""

    __slots__ = ("index", "name")
    __array_ufunc__ = None

    def __init__(self, index: int, name: str) -> None:
        self.index = index
        self.name = name

    def __repr__(self) -> str:
        return f"Var({self.index}, {self.name!r})"

    def to_affine(self) -> "Affine":
        return Affine({self.index: 1.0})

    def value(self, x: np.ndarray) -> float:
        return float(x[self.index])

    def __add__(self, other):
        return self.to_affine() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.to_affine() - other

    def __rsub__(self, other):
        return _as_affine(other) - self.to_affine()

    def __mul__(self, k):
        return self.to_affine() * k

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self.to_affine() / k

    def __neg__(self):
        return self.to_affine() * -1.0

    def __le__(self, other):
        return self.to_affine() <= other

    def __ge__(self, other):
        return self.to_affine() >= other


class Affine:
    """Sparse affine expression Σ coeff·x[index] + const."""

    __slots__ = ("terms", "const")
    __array_ufunc__ = None

    def __init__(self, terms: Mapping[int, float] | None = None, const: float = 0.0) -> None:
        self.terms: dict[int, float] = dict(terms or {})
        self.const = float(const)

    def __repr__(self) -> str:
        return f"Affine({self.terms}, {self.const})"

    def copy(self) -> "Affine":
        return Affine(self.terms, self.const)

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(c * float(x[i]) for i, c in self.terms.items())

    def __add__(self, other):
        other = _as_affine(other)
        out = self.copy()
        for i, c in other.terms.items():
            out.terms[i] = out.terms.get(i, 0.0) + c
        out.const += other.const
        return out

    __radd__ = __add__

    def __sub__(self, other):
        return self + _as_affine(other) * -1.0

    def __rsub__(self, other):
        return _as_affine(other) - self

    def __mul__(self, k):
        if isinstance(k, (Var, Affine)):
            raise ModelError("product of two expressions is not affine")
        k = float(k)
        return Affine({i: c * k for i, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / float(k))

    def __neg__(self):
        return self * -1.0

    def __le__(self, other):
        return _constraint(self - other, "<=")

    def __ge__(self, other):
        return _constraint(self - other, ">=")


def _as_affine(value) -> Affine:
    if isinstance(value, Affine):
        return value
    if isinstance(value, Var):
        return value.to_affine()
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Affine(const=float(value))
    raise ModelError(f"cannot use {type(value).__name__} in an affine expression")


def quicksum(items: Iterable) -> Affine:
    """Sum of Vars, Affines and numbers without quadratic copying."""
    out = Affine()
    for item in items:
        item = _as_affine(item)
        for i, c in item.terms.items():
            out.terms[i] = out.terms.get(i, 0.0) + c
        out.const += item.const
    return out


@dataclass
class LinearConstraint:
    """Σ coeffs[i]·x_i  (sense)  rhs, with sense one of "<=", ">=", "=="."""

    coeffs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""

    def named(self, name: str) -> "LinearConstraint":
        self.name = name
        return self

    def residual(self, x: np.ndarray) -> float:
        """Amount of violation at x (0 when satisfied)."""
        lhs = sum(c * float(x[i]) for i, c in self.coeffs.items())
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


def _constraint(expr, sense: str) -> LinearConstraint:
    expr = _as_affine(expr)
    coeffs = {i: c for i, c in expr.terms.items() if c != 0.0}
    return LinearConstraint(coeffs, sense, -expr.const)


def eq(lhs, rhs) -> LinearConstraint:
    """lhs == rhs as a linear constraint."""
    return _constraint(_as_affine(lhs) - rhs, "==")


@dataclass
class ConeConstraint:
    """‖rows‖₂ ≤ bound."""

    rows: list[Affine]
    bound: Affine
    name: str = ""

    def named(self, name: str) -> "ConeConstraint":
        self.name = name
        return self

    def slack(self, x: np.ndarray) -> float:
        """t − ‖y‖ at x; negative means violated."""
        norm = math.sqrt(sum(r.value(x) ** 2 for r in self.rows))
        return self.bound.value(x) - norm


Constraint = Union[LinearConstraint, ConeConstraint]


@dataclass
class VarInfo:
    name: str
    lb: float
    ub: float
    kind: str


@dataclass
class DirectionPair:
    """Complementary binaries (f⁺, f⁻) branched as one decision; hint ≈ F⁺ − F⁻."""

    plus: Var
    minus: Var
    hint: Affine | None = None


@dataclass
class CompiledCone:
    """Cone data: y = A x + b, t = c·x + d."""

    A: sparse.csr_matrix
    b: np.ndarray
    c: sparse.csr_matrix
    d: float
    name: str


@dataclass
class CompiledProgram:
    n: int
    c: np.ndarray
    c0: float
    A_ub: sparse.csr_matrix
    b_ub: np.ndarray
    A_eq: sparse.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binaries: np.ndarray
    cones: list[CompiledCone]
    pairs: list[tuple[int, int]]


@dataclass
class ConicProgram:
    """Variables, linear rows, cones and a linear objective."""

    name: str = "program"
    variables: list[VarInfo] = field(default_factory=list)
    linear: list[LinearConstraint] = field(default_factory=list)
    cones: list[ConeConstraint] = field(default_factory=list)
    objective: Affine = field(default_factory=Affine)
    pairs: list[DirectionPair] = field(default_factory=list)
    _by_name: dict[str, Var] = field(default_factory=dict, repr=False)

    def add_var(
        self,
        name: str,
        lb: float = 0.0,
        ub: float = math.inf,
        kind: str = CONTINUOUS,
    ) -> Var:
        if name in self._by_name:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        var = Var(len(self.variables), name)
        self.variables.append(VarInfo(name, float(lb), float(ub), kind))
        self._by_name[name] = var
        return var

    def add_binary(self, name: str) -> Var:
        return self.add_var(name, 0.0, 1.0, BINARY)

    def var(self, name: str) -> Var:
        try:
            return self._by_name[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}")

    def fix(self, var: Var, value: float) -> None:
        info = self.variables[var.index]
        info.lb = info.ub = float(value)

    def add(self, constraints: Constraint | Iterable[Constraint]) -> None:
        if isinstance(constraints, (LinearConstraint, ConeConstraint)):
            constraints = (constraints,)
        for con in constraints:
            if isinstance(con, LinearConstraint):
                self.linear.append(con)
            elif isinstance(con, ConeConstraint):
                self.cones.append(con)
            else:
                raise ModelError(f"not a constraint: {con!r}")

    def minimize(self, expr) -> None:
        self.objective = _as_affine(expr).copy()

    def pair_binaries(self, plus: Var, minus: Var, hint=None) -> None:
        for v in (plus, minus):
            if self.variables[v.index].kind != BINARY:
                raise ModelError(f"{v.name} is not binary")
        self.pairs.append(DirectionPair(plus, minus, None if hint is None else _as_affine(hint)))

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def binary_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == BINARY]

    def validate(self) -> None:
        """Raise ModelError when a constraint or the objective references an undeclared variable."""
        n = self.n
        for k, info in enumerate(self.variables):
            if info.lb > info.ub:
                raise ModelError(f"variable {info.name}: lb > ub")
            if info.kind == BINARY and not (0.0 <= info.lb and info.ub <= 1.0):
                raise ModelError(f"binary {info.name} has bounds outside [0, 1]")

        def check(terms: Mapping[int, float], where: str) -> None:
            for i, c in terms.items():
                if not 0 <= i < n:
                    raise ModelError(f"{where} references undeclared variable {i}")
                if not math.isfinite(c):
                    raise ModelError(f"{where} has a non-finite coefficient")

        for k, con in enumerate(self.linear):
            check(con.coeffs, con.name or f"linear[{k}]")
            if not math.isfinite(con.rhs):
                raise ModelError(f"{con.name or f'linear[{k}]'} has a non-finite rhs")
        for k, cone in enumerate(self.cones):
            where = cone.name or f"cone[{k}]"
            for row in cone.rows:
                check(row.terms, where)
            check(cone.bound.terms, where)
        check(self.objective.terms, "objective")

    def counts(self) -> dict[str, int]:
        out = default_counts()
        out["variables"] = self.n
        out["binaries"] = len(self.binary_indices)
        out["linear"] = len(self.linear)
        out["cones"] = len(self.cones)
        out["direction_pairs"] = len(self.pairs)
        return out

    def compile(self) -> CompiledProgram:
        """Matrices for the relaxation solver. Validates first."""
        self.validate()
        n = self.n
        c = np.zeros(n)
        for i, coef in self.objective.terms.items():
            c[i] += coef

        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for con in self.linear:
            if con.sense == "<=":
                ub_rows.append(con.coeffs)
                ub_rhs.append(con.rhs)
            elif con.sense == ">=":
                ub_rows.append({i: -v for i, v in con.coeffs.items()})
                ub_rhs.append(-con.rhs)
            elif con.sense == "==":
                eq_rows.append(con.coeffs)
                eq_rhs.append(con.rhs)
            else:
                raise ModelError(f"unknown constraint sense {con.sense!r}")

        cones = []
        for k, cone in enumerate(self.cones):
            A = _rows_to_csr([r.terms for r in cone.rows], n)
            b = np.array([r.const for r in cone.rows])
            cvec = _rows_to_csr([cone.bound.terms], n)
            cones.append(CompiledCone(A, b, cvec, cone.bound.const, cone.name or f"cone[{k}]"))

        return CompiledProgram(
            n=n,
            c=c,
            c0=self.objective.const,
            A_ub=_rows_to_csr(ub_rows, n),
            b_ub=np.array(ub_rhs, dtype=float),
            A_eq=_rows_to_csr(eq_rows, n),
            b_eq=np.array(eq_rhs, dtype=float),
            lb=np.array([v.lb for v in self.variables], dtype=float),
            ub=np.array([v.ub for v in self.variables], dtype=float),
            binaries=np.array(self.binary_indices, dtype=int),
            cones=cones,
            pairs=[(p.plus.index, p.minus.index) for p in self.pairs],
        )


def _rows_to_csr(rows: list[Mapping[int, float]], n: int) -> sparse.csr_matrix:
    data, indices, indptr = [], [], [0]
    for row in rows:
        for i, v in sorted(row.items()):
            indices.append(i)
            data.append(v)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data, dtype=float), np.array(indices, dtype=int), np.array(indptr, dtype=int)),
        shape=(len(rows), n),
    )


def encode_quadratic_epigraph(a: float, b: float, c: float, P, u, fcost) -> Constraint:
    """
    fcost ≥ a·P² + b·P + c·u as a rotated cone.

    With w = fcost − b·P − c·u the cone is ‖(2√a·P, w − 1)‖₂ ≤ w + 1, which is
    equivalent to a·P² ≤ w. For a = 0 the linear row fcost ≥ b·P + c·u is returned.
    """
    if a < 0:
        raise ModelError(f"quadratic coefficient must be nonnegative, got {a}")
    w = _as_affine(fcost) - _as_affine(P) * b - _as_affine(u) * c
    if a == 0:
        return w >= 0
    return ConeConstraint(rows=[_as_affine(P) * (2.0 * math.sqrt(a)), w - 1.0], bound=w + 1.0)


# ---------------------------------------------------------------------------
# Text interchange format
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def _fmt_terms(terms: Mapping[int, float]) -> str:
    return " ".join(f"{i}:{_fmt(c)}" for i, c in sorted(terms.items()))


def dump_program(prog: ConicProgram, path: Path | str) -> Path:
    """Write the program in the line-oriented format described in docs/format.md."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# ies conic program {prog.name}"]
    counts = prog.counts()
    lines.append("# " + " ".join(f"{k}={v}" for k, v in counts.items()))
    for i, info in enumerate(prog.variables):
        lines.append(f"var {i} {info.name} {info.kind} {_fmt(info.lb)} {_fmt(info.ub)}")
    for k, con in enumerate(prog.linear):
        name = con.name or f"lin{k}"
        lines.append(f"lin {name} {con.sense} {_fmt(con.rhs)} {_fmt_terms(con.coeffs)}".rstrip())
    for k, cone in enumerate(prog.cones):
        name = cone.name or f"soc{k}"
        parts = [f"soc {name} {len(cone.rows)}", f"| t {_fmt(cone.bound.const)} {_fmt_terms(cone.bound.terms)}".rstrip()]
        for row in cone.rows:
            parts.append(f"| y {_fmt(row.const)} {_fmt_terms(row.terms)}".rstrip())
        lines.append(" ".join(parts))
    for p in prog.pairs:
        lines.append(f"pair {p.plus.index} {p.minus.index}")
    lines.append(f"obj {_fmt(prog.objective.const)} {_fmt_terms(prog.objective.terms)}".rstrip())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("wrote conic program dump to %s", path)
    return path
