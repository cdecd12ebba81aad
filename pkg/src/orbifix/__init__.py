"""Orbitopal fixing inside a small branch-and-bound, with a unit-commitment
model and brute-force oracles."""

from .kernel import (
    CellValue,
    FixingResult,
    MatrixView,
    PartialMatrix,
    build_max_sequence,
    build_min_sequence,
    compute_fixing,
    compute_fixing_matrix,
    first_fixed_row,
    last_discriminating_row,
)
from .lp import LinearRow, LpOutcome, LpProblem, solve_lp
from .problem import BinaryProgram, NodeState, SymmetricBlock
from .bnb import SolveConfig, SolveResult, SolveStats, solve
from .mucp import MucpInstance, MucpSolution, UnitType, build_model, generate_instance

__all__ = [
    "CellValue", "FixingResult", "MatrixView", "PartialMatrix", "build_max_sequence",
    "build_min_sequence", "compute_fixing", "compute_fixing_matrix", "first_fixed_row",
    "last_discriminating_row", "LinearRow", "LpOutcome", "LpProblem", "solve_lp",
    "BinaryProgram", "NodeState", "SymmetricBlock", "SolveConfig", "SolveResult",
    "SolveStats", "solve", "MucpInstance", "MucpSolution", "UnitType", "build_model",
    "generate_instance",
]
