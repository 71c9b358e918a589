"""Linear programming core: problem container, simplex solver, MPS files."""

from .mps import parse_mps, read_mps, render_mps, write_mps
from .problem import (
    LpProblem,
    LpRow,
    LpSolution,
    build_problem,
    evaluate_residuals,
    objective_value,
)
from .simplex import SolveOptions, solve

__all__ = [
    "LpProblem",
    "LpRow",
    "LpSolution",
    "SolveOptions",
    "build_problem",
    "evaluate_residuals",
    "objective_value",
    "parse_mps",
    "read_mps",
    "render_mps",
    "solve",
    "write_mps",
]
