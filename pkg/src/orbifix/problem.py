"""Model and node containers shared by the search, the scope detector and the
unit-commitment layer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .kernel import FREE, PartialMatrix
from .lp import LinearRow


@dataclass
class SymmetricBlock:
    """A group of interchangeable columns of binary variables.

    ``grid[r][c]`` is the variable index of cell ``(r, c)``.  ``linked[r][c]``
    lists further variables that move together with that cell when columns are
    permuted (for unit commitment: the start-up and power variables).
    ``windows`` holds ``(min_up, min_down)`` when ready-to-start / ready-to-stop
    scopes make sense for the block.
    """

    grid: list
    name: str = ""
    col_offset: int = 0
    linked: Optional[list] = None
    windows: Optional[tuple] = None

    @property
    def rows(self) -> int:
        return len(self.grid)

    @property
    def cols(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    def matrix(self, fixed: dict) -> PartialMatrix:
        M = PartialMatrix(self.rows, self.cols)
        cells = M.cells
        k = 0
        for row in self.grid:
            for var in row:
                v = fixed.get(var)
                if v is not None:
                    cells[k] = v
                k += 1
        return M

    def column_values(self, values, c: int) -> list:
        return [values[row[c]] for row in self.grid]


@dataclass
class BinaryProgram:
    """Minimise ``objective @ x`` over linear rows, with some variables binary.

    Binary cells that belong to a ``SymmetricBlock`` take part in symmetry
    handling.  All blocks share the same row count.  ``startup_vars`` maps
    start-up variables to (block, row, column) for step branching.
    """

    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    binary: np.ndarray
    rows: list
    blocks: list = field(default_factory=list)
    names: Optional[list] = None
    startup_vars: dict = field(default_factory=dict)
    # optional primal heuristic: LP point -> list of binary fixings to try
    rounding: Optional[Callable] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.binary = np.asarray(self.binary, dtype=bool)
        n = len(self.objective)
        if not (len(self.lower) == len(self.upper) == len(self.binary) == n):
            raise ValueError("objective, bounds and binary flags differ in length")
        self.cell_of = {}
        for b, block in enumerate(self.blocks):
            for r, row in enumerate(block.grid):
                for c, var in enumerate(row):
                    if not self.binary[var]:
                        raise ValueError(f"grid variable {var} is not binary")
                    if var in self.cell_of:
                        raise ValueError(f"variable {var} appears in two grid cells")
                    self.cell_of[var] = (b, r, c)
        heights = {block.rows for block in self.blocks}
        if len(heights) > 1:
            raise ValueError("blocks must share the same number of rows")
        self.num_rows = heights.pop() if heights else 0
        self.linked_owner = {}
        for b, block in enumerate(self.blocks):
            if block.linked is None:
                continue
            for row in block.linked:
                for var_list in row:
                    for var in var_list:
                        self.linked_owner[var] = b

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @classmethod
    def pure_grid(cls, m: int, n: int, rows: Sequence[LinearRow] = (), objective=None):
        """An m x n block of binaries with optional rows; handy for enumeration."""
        grid = [[i * n + j for j in range(n)] for i in range(m)]
        obj = np.zeros(m * n) if objective is None else objective
        return cls(obj, np.zeros(m * n), np.ones(m * n), np.ones(m * n, dtype=bool),
                   list(rows), [SymmetricBlock(grid, "grid")])


@dataclass
class NodeState:
    """One search node: fixed binaries, dynamic row order, bound, depth.

    ``extra_rows`` are rows added by branching on a row-set disjunction;
    ``broken`` lists blocks whose column symmetry was disturbed by branching on
    a variable outside the grid.
    """

    fixed: dict = field(default_factory=dict)
    row_order: tuple = ()
    depth: int = 0
    bound: float = -np.inf
    extra_rows: tuple = ()
    broken: frozenset = frozenset()

    @property
    def fixed_zero(self) -> set:
        return {k for k, v in self.fixed.items() if v == 0}

    @property
    def fixed_one(self) -> set:
        return {k for k, v in self.fixed.items() if v == 1}

    def child(self, fixes: dict, rows_seen: Sequence[int] = (), extra=(), broken=()):
        fixed = dict(self.fixed)
        for k, v in fixes.items():
            if fixed.get(k, v) != v:
                raise ValueError(f"variable {k} already fixed to {fixed[k]}")
            fixed[k] = v
        return NodeState(
            fixed,
            extend_row_order(self.row_order, rows_seen),
            self.depth + 1,
            self.bound,
            self.extra_rows + tuple(extra),
            self.broken | frozenset(broken),
        )


def extend_row_order(order: Sequence[int], rows: Sequence[int]) -> tuple:
    """Append the rows not yet present, keeping their order."""
    out = list(order)
    seen = set(out)
    for r in rows:
        if r not in seen:
            out.append(r)
            seen.add(r)
    return tuple(out)


def free_cells(M: PartialMatrix) -> int:
    return sum(1 for v in M.cells if v == FREE)
