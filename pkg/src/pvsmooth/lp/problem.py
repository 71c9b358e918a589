"""General linear-program container with per-variable bounds and sparse rows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import LpDefinitionError

RELATIONS = ("<=", "=", ">=")
SENSES = ("maximize", "minimize")


@dataclass(frozen=True)
class LpRow:
    """One constraint: sparse coefficients, relation and right-hand side."""

    cols: np.ndarray
    vals: np.ndarray
    relation: str
    rhs: float
    name: str = ""


@dataclass(frozen=True)
class LpSolution:
    """Solver output; residuals are recomputed from the problem data, not
    taken from solver state."""

    status: str  # optimal | infeasible | unbounded | iteration-limit
    x: np.ndarray
    objective_value: float
    iterations: int
    max_primal_residual: float
    max_bound_violation: float


@dataclass(frozen=True)
class LpProblem:
    sense: str
    objective: np.ndarray
    objective_offset: float
    lower: np.ndarray
    upper: np.ndarray
    rows: tuple[LpRow, ...]
    col_names: tuple[str, ...]
    name: str = "LP"

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        return len(self.rows)


def build_problem(
    sense: str,
    bounds: list[tuple[float, float]],
    rows: list[tuple[list[tuple[int, float]], str, float]],
    objective: list[float],
    *,
    offset: float = 0.0,
    col_names: list[str] | None = None,
    row_names: list[str] | None = None,
    name: str = "LP",
) -> LpProblem:
    """Validate and assemble an :class:`LpProblem`.

    ``bounds`` is one ``(lower, upper)`` pair per variable (infinities
    allowed), ``rows`` is a list of ``(coeffs, relation, rhs)`` with sparse
    ``(col, val)`` coefficients, and ``objective`` is dense.
    """
    if sense not in SENSES:
        raise LpDefinitionError(f"sense must be one of {SENSES}, got {sense!r}")
    n = len(objective)
    if len(bounds) != n:
        raise LpDefinitionError(f"{len(bounds)} bounds for {n} objective coefficients")
    obj = np.asarray(objective, dtype=float)
    if not np.all(np.isfinite(obj)):
        j = int(np.flatnonzero(~np.isfinite(obj))[0])
        raise LpDefinitionError(f"objective coefficient {j} is not finite: {obj[j]}")
    if not math.isfinite(offset):
        raise LpDefinitionError(f"objective offset is not finite: {offset}")

    lower = np.empty(n)
    upper = np.empty(n)
    for j, (lo, hi) in enumerate(bounds):
        if math.isnan(lo) or math.isnan(hi):
            raise LpDefinitionError(f"variable {j}: NaN bound")
        if lo > hi:
            raise LpDefinitionError(f"variable {j}: lower bound {lo} exceeds upper bound {hi}")
        lower[j] = lo
        upper[j] = hi

    if col_names is None:
        col_names = [f"x{j}" for j in range(n)]
    elif len(col_names) != n:
        raise LpDefinitionError(f"{len(col_names)} column names for {n} variables")
    if row_names is None:
        row_names = [f"r{i}" for i in range(len(rows))]
    elif len(row_names) != len(rows):
        raise LpDefinitionError(f"{len(row_names)} row names for {len(rows)} rows")

    built: list[LpRow] = []
    for i, (coeffs, relation, rhs) in enumerate(rows):
        if relation not in RELATIONS:
            raise LpDefinitionError(f"row {i}: relation must be one of {RELATIONS}, got {relation!r}")
        if not math.isfinite(rhs):
            raise LpDefinitionError(f"row {i}: right-hand side is not finite: {rhs}")
        seen: set[int] = set()
        cols = np.empty(len(coeffs), dtype=np.int64)
        vals = np.empty(len(coeffs))
        for k, (col, val) in enumerate(coeffs):
            if not 0 <= col < n:
                raise LpDefinitionError(f"row {i}: column index {col} out of range 0..{n - 1}")
            if col in seen:
                raise LpDefinitionError(f"row {i}: duplicate column index {col}")
            if not math.isfinite(val):
                raise LpDefinitionError(f"row {i}: coefficient for column {col} is not finite: {val}")
            seen.add(col)
            cols[k] = col
            vals[k] = val
        built.append(LpRow(cols=cols, vals=vals, relation=relation, rhs=float(rhs), name=row_names[i]))

    return LpProblem(
        sense=sense,
        objective=obj,
        objective_offset=float(offset),
        lower=lower,
        upper=upper,
        rows=tuple(built),
        col_names=tuple(col_names),
        name=name,
    )


def evaluate_residuals(problem: LpProblem, x: np.ndarray) -> tuple[float, float]:
    """Worst constraint violation and worst bound violation at ``x``.

    This is the independent feasibility pass: it reads only the problem data
    and the candidate point.
    """
    max_row = 0.0
    for row in problem.rows:
        ax = float(np.dot(row.vals, x[row.cols]))
        if row.relation == "<=":
            viol = ax - row.rhs
        elif row.relation == ">=":
            viol = row.rhs - ax
        else:
            viol = abs(ax - row.rhs)
        max_row = max(max_row, viol)
    lo_viol = np.max(problem.lower - x, initial=0.0)
    hi_viol = np.max(x - problem.upper, initial=0.0)
    return max_row, float(max(lo_viol, hi_viol))


def objective_value(problem: LpProblem, x: np.ndarray) -> float:
    return float(np.dot(problem.objective, x) + problem.objective_offset)
