"""Orbitopal fixing for the full orbitope.

Given a face of the 0/1 cube (cells fixed to 0, cells fixed to 1, the rest
free) and a view selecting an ordered row list and a column list, compute the
smallest face that contains every binary matrix of the face whose view columns
are lexicographically non-increasing.  Everything runs in O(rows * cols).

Cell indices are 0-based ``(row, col)`` pairs in the coordinates of the whole
matrix; positions inside a view are 0-based as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional, Sequence

Cell = tuple[int, int]


class CellValue(IntEnum):
    ZERO = 0
    ONE = 1
    FREE = 2


ZERO, ONE, FREE = 0, 1, 2


class PartialMatrix:
    """An m x n grid over {0, 1, free}, stored flat and row-major."""

    __slots__ = ("rows", "cols", "cells")

    def __init__(self, rows: int, cols: int, cells: Optional[Iterable[int]] = None):
        self.rows = rows
        self.cols = cols
        if cells is None:
            self.cells = bytearray([FREE]) * (rows * cols)
        else:
            self.cells = bytearray(cells)
            if len(self.cells) != rows * cols:
                raise ValueError("cell count does not match the shape")
            if any(v > FREE for v in self.cells):
                raise ValueError("cell values must be 0, 1 or 2 (free)")

    @classmethod
    def from_sets(cls, rows: int, cols: int, zeros: Iterable[Cell] = (), ones: Iterable[Cell] = ()):
        m = cls(rows, cols)
        for value, cells in ((ZERO, zeros), (ONE, ones)):
            for i, j in cells:
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError(f"cell {(i, j)} outside a {rows}x{cols} matrix")
                k = i * cols + j
                if m.cells[k] != FREE and m.cells[k] != value:
                    raise ValueError(f"cell {(i, j)} fixed to both 0 and 1")
                m.cells[k] = value
        return m

    @classmethod
    def from_rows(cls, grid: Sequence[Sequence[Optional[int]]]):
        """Build from nested rows; ``None`` or 2 marks a free cell."""
        rows = len(grid)
        cols = len(grid[0]) if rows else 0
        flat = []
        for r in grid:
            if len(r) != cols:
                raise ValueError("ragged grid")
            flat.extend(FREE if v is None else int(v) for v in r)
        return cls(rows, cols, flat)

    def __getitem__(self, cell: Cell) -> int:
        i, j = cell
        return self.cells[i * self.cols + j]

    def __setitem__(self, cell: Cell, value: int) -> None:
        i, j = cell
        self.cells[i * self.cols + j] = value

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartialMatrix):
            return NotImplemented
        return (self.rows, self.cols, self.cells) == (other.rows, other.cols, other.cells)

    def __repr__(self) -> str:
        sym = "01x"
        body = " / ".join(
            " ".join(sym[self.cells[i * self.cols + j]] for j in range(self.cols))
            for i in range(self.rows)
        )
        return f"PartialMatrix({self.rows}x{self.cols}: {body})"

    def copy(self) -> "PartialMatrix":
        return PartialMatrix(self.rows, self.cols, self.cells)

    @property
    def zeros(self) -> set[Cell]:
        n = self.cols
        return {divmod(k, n) for k, v in enumerate(self.cells) if v == ZERO}

    @property
    def ones(self) -> set[Cell]:
        n = self.cols
        return {divmod(k, n) for k, v in enumerate(self.cells) if v == ONE}

    def column(self, view: "MatrixView", pos: int) -> list[int]:
        """Codes of the view column at position ``pos``, in view row order."""
        c = view.col_order[pos]
        n = self.cols
        cells = self.cells
        return [cells[r * n + c] for r in view.row_order]


@dataclass(frozen=True)
class MatrixView:
    """Ordered rows and columns selecting a sub-matrix.

    Position k of ``row_order`` is the k-th most significant row for the
    lexicographic comparison of columns.
    """

    row_order: tuple[int, ...]
    col_order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_order", tuple(self.row_order))
        object.__setattr__(self, "col_order", tuple(self.col_order))
        if len(set(self.row_order)) != len(self.row_order):
            raise ValueError("duplicate row in view")
        if len(set(self.col_order)) != len(self.col_order):
            raise ValueError("duplicate column in view")

    @classmethod
    def full(cls, rows: int, cols: int) -> "MatrixView":
        return cls(tuple(range(rows)), tuple(range(cols)))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_order), len(self.col_order)

    def cells(self):
        for r in self.row_order:
            for c in self.col_order:
                yield (r, c)


@dataclass(frozen=True)
class FixingResult:
    """Outcome of orbitopal fixing on one view.

    When ``feasible`` is False the face holds no lexicographically sorted
    matrix and the remaining fields are empty.  ``min_matrix`` and
    ``max_matrix`` are given as rows in view order over view columns.
    """

    feasible: bool
    fix0: frozenset = frozenset()
    fix1: frozenset = frozenset()
    min_matrix: tuple = ()
    max_matrix: tuple = ()
    first_diff: tuple = field(default=(), compare=False)

    @classmethod
    def infeasible(cls) -> "FixingResult":
        return cls(False)

    @property
    def count(self) -> int:
        return len(self.fix0) + len(self.fix1)


def _first_fixed(cur: Sequence[int], other: Sequence[int]) -> int:
    # other may hold free cells too; both entries must be fixed and differ
    for i, v in enumerate(cur):
        w = other[i]
        if v != FREE and w != FREE and v != w:
            return i
    return len(cur)


def _last_discriminating(left: Sequence[int], right: Sequence[int], upto: int) -> int:
    i = min(upto, len(left) - 1)
    while i >= 0:
        if left[i] != ZERO and right[i] != ONE:
            return i
        i -= 1
    return -1


def first_fixed_row(M: PartialMatrix, view: MatrixView, j: int) -> int:
    """Smallest view-row position where view columns j and j+1 are both fixed
    and differ; ``len(view.row_order)`` when no such row exists."""
    if not 0 <= j < len(view.col_order) - 1:
        raise IndexError("column position must leave room for j+1")
    return _first_fixed(M.column(view, j), M.column(view, j + 1))


def last_discriminating_row(M: PartialMatrix, view: MatrixView, j: int, i_f: int) -> int:
    """Largest view-row position ``i <= i_f`` where column j is not 0 and
    column j+1 is not 1; -1 when none."""
    if not 0 <= j < len(view.col_order) - 1:
        raise IndexError("column position must leave room for j+1")
    return _last_discriminating(M.column(view, j), M.column(view, j + 1), i_f)


def _min_columns(cols: list[list[int]]) -> Optional[list[list[int]]]:
    n = len(cols)
    if n == 0:
        return []
    out = [None] * n
    nxt = [ZERO if v == FREE else v for v in cols[-1]]
    out[-1] = nxt
    for j in range(n - 2, -1, -1):
        cur = cols[j]
        i_f = _first_fixed(cur, nxt)
        if i_f == len(cur):
            col = [nxt[i] if v == FREE else v for i, v in enumerate(cur)]
        else:
            i_d = _last_discriminating(cur, nxt, i_f)
            if i_d < 0:
                return None
            col = [nxt[i] if v == FREE else v for i, v in enumerate(cur[:i_d])]
            col.append(ONE if cur[i_d] == FREE else cur[i_d])
            col.extend(ZERO if v == FREE else v for v in cur[i_d + 1:])
        out[j] = col
        nxt = col
    return out


def _max_columns(cols: list[list[int]]) -> Optional[list[list[int]]]:
    n = len(cols)
    if n == 0:
        return []
    out = [None] * n
    prev = [ONE if v == FREE else v for v in cols[0]]
    out[0] = prev
    for j in range(1, n):
        cur = cols[j]
        i_f = _first_fixed(cur, prev)
        if i_f == len(cur):
            col = [prev[i] if v == FREE else v for i, v in enumerate(cur)]
        else:
            # a row where prev can exceed cur: prev is 1 and cur is not
            i_d = _last_discriminating(prev, cur, i_f)
            if i_d < 0:
                return None
            col = [prev[i] if v == FREE else v for i, v in enumerate(cur[:i_d])]
            col.append(ZERO if cur[i_d] == FREE else cur[i_d])
            col.extend(ONE if v == FREE else v for v in cur[i_d + 1:])
        out[j] = col
        prev = col
    return out


def _view_columns(zeros, ones, view: MatrixView) -> list[list[int]]:
    cols = []
    for c in view.col_order:
        col = []
        for r in view.row_order:
            cell = (r, c)
            if cell in zeros:
                if cell in ones:
                    raise ValueError(f"cell {cell} fixed to both 0 and 1")
                col.append(ZERO)
            elif cell in ones:
                col.append(ONE)
            else:
                col.append(FREE)
        cols.append(col)
    return cols


def _as_rows(cols: list[list[int]], m: int) -> tuple:
    return tuple(tuple(col[i] for col in cols) for i in range(m))


def build_min_sequence(I0, I1, view: MatrixView) -> Optional[tuple]:
    """Column-wise smallest sorted completion of the face, as view rows.

    Returns None when the face contains no sorted matrix.
    """
    lo = _min_columns(_view_columns(I0, I1, view))
    return None if lo is None else _as_rows(lo, len(view.row_order))


def build_max_sequence(I0, I1, view: MatrixView) -> Optional[tuple]:
    """Column-wise largest sorted completion of the face, or None."""
    hi = _max_columns(_view_columns(I0, I1, view))
    return None if hi is None else _as_rows(hi, len(view.row_order))


def fix_columns(cols: list[list[int]]):
    """Core sweep on already-extracted view columns.

    Returns None when infeasible, else ``(fix0, fix1, lo, hi, first_diff)``
    where the fix lists hold ``(row position, column position)`` pairs.
    """
    lo = _min_columns(cols)
    if lo is None:
        return None
    hi = _max_columns(cols)
    if hi is None:
        return None
    fix0, fix1, first_diff = [], [], []
    for c, col in enumerate(cols):
        lc, hc = lo[c], hi[c]
        m = len(col)
        i_c = m
        for i in range(m):
            if lc[i] != hc[i]:
                i_c = i
                break
        first_diff.append(i_c)
        for i in range(i_c):
            if col[i] == FREE:
                (fix1 if lc[i] == ONE else fix0).append((i, c))
    return fix0, fix1, lo, hi, first_diff


def compute_fixing(I0, I1, view: MatrixView) -> FixingResult:
    """Maximal fixing of the face ``(I0, I1)`` against the full orbitope of
    ``view``.

    ``I0`` and ``I1`` are collections of ``(row, col)`` cells; cells outside
    the view are ignored.  Newly fixable cells come back in whole-matrix
    coordinates.
    """
    if not isinstance(I0, (set, frozenset)):
        I0 = set(I0)
    if not isinstance(I1, (set, frozenset)):
        I1 = set(I1)
    cols = _view_columns(I0, I1, view)
    return _result_from_columns(cols, view)


def compute_fixing_matrix(M: PartialMatrix, view: MatrixView) -> FixingResult:
    cols = [M.column(view, p) for p in range(len(view.col_order))]
    return _result_from_columns(cols, view)


def _result_from_columns(cols, view: MatrixView) -> FixingResult:
    out = fix_columns(cols)
    if out is None:
        return FixingResult.infeasible()
    fix0, fix1, lo, hi, first_diff = out
    rows, colo = view.row_order, view.col_order
    m = len(rows)
    return FixingResult(
        True,
        frozenset((rows[i], colo[c]) for i, c in fix0),
        frozenset((rows[i], colo[c]) for i, c in fix1),
        _as_rows(lo, m),
        _as_rows(hi, m),
        tuple(first_diff),
    )
