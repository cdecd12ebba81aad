"""Brute-force ground truth.

Nothing here is used on the solving path.  The lexicographic predicate is
written out again from its definition instead of reusing the kernel, so the
two can be checked against each other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .kernel import FixingResult, MatrixView, PartialMatrix, compute_fixing_matrix


def column_geq(y: Sequence[int], z: Sequence[int]) -> bool:
    """True when column y is lexicographically greater than or equal to z
    (first entry most significant)."""
    for a, b in zip(y, z):
        if a != b:
            return a > b
    return True


def is_sorted_columns(columns: Sequence[Sequence[int]]) -> bool:
    return all(column_geq(columns[j], columns[j + 1]) for j in range(len(columns) - 1))


def view_is_sorted(X: dict, view: MatrixView) -> bool:
    """Lex check of ``X`` (mapping cell -> bit) restricted to ``view``."""
    cols = [[X[(r, c)] for r in view.row_order] for c in view.col_order]
    return is_sorted_columns(cols)


@dataclass
class FaceEnumeration:
    view: MatrixView
    members: list  # each member: dict cell -> bit over the view cells

    def __len__(self):
        return len(self.members)

    def as_rows(self, X: dict) -> tuple:
        return tuple(tuple(X[(r, c)] for c in self.view.col_order) for r in self.view.row_order)


def enumerate_face(I0, I1, view: MatrixView, max_cells: int = 20) -> FaceEnumeration:
    """All completions of the free view cells whose view columns are sorted."""
    I0, I1 = set(I0), set(I1)
    if I0 & I1:
        raise ValueError("I0 and I1 overlap")
    cells = list(view.cells())
    if len(cells) > max_cells:
        raise ValueError(f"view has {len(cells)} cells, enumeration capped at {max_cells}")
    free = [c for c in cells if c not in I0 and c not in I1]
    base = {c: (0 if c in I0 else 1) for c in cells if c in I0 or c in I1}
    members = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        X = dict(base)
        X.update(zip(free, bits))
        if view_is_sorted(X, view):
            members.append(X)
    return FaceEnumeration(view, members)


def oracle_fixing(I0, I1, view: MatrixView, max_cells: int = 20) -> FixingResult:
    """Fixing by intersecting every sorted completion of the face."""
    I0, I1 = set(I0), set(I1)
    enum = enumerate_face(I0, I1, view, max_cells)
    if not enum.members:
        return FixingResult.infeasible()
    free = [c for c in view.cells() if c not in I0 and c not in I1]
    fix0 = frozenset(c for c in free if all(X[c] == 0 for X in enum.members))
    fix1 = frozenset(c for c in free if all(X[c] == 1 for X in enum.members))
    return FixingResult(True, fix0, fix1)


def face_fixing_table(m: int, n: int):
    """Oracle fixing for every one of the 3**(m*n) faces of an m x n matrix.

    Faces are indexed by base-3 digits over the cells in row-major order
    (0 = fixed to 0, 1 = fixed to 1, 2 = free), most significant digit first,
    i.e. the order of ``itertools.product(range(3), repeat=m*n)``.

    Returns ``(feasible, fix0, fix1)`` arrays; the fix arrays are bitmasks
    where bit k stands for cell ``divmod(k, n)``.

    Built by brute force over the 2**(m*n) complete matrices, then extended
    one cell at a time to faces where that cell is free: the members of such a
    face are the union of the members with that cell at 0 and at 1, so the
    bitwise AND / OR over members combine directly.
    """
    K = m * n
    if K > 16:
        raise ValueError("table limited to 16 cells")
    mats = np.arange(1 << K, dtype=np.int64)
    # bit k of a matrix index is cell k; digit order puts cell 0 first
    bits = (mats[:, None] >> np.arange(K)[None, :]) & 1
    sorted_ok = np.empty(1 << K, dtype=bool)
    for idx in range(1 << K):
        row = bits[idx]
        cols = [[int(row[i * n + j]) for i in range(m)] for j in range(n)]
        sorted_ok[idx] = is_sorted_columns(cols)
    # reorder so axis k of a (2,)*K array is cell k
    shape2 = (2,) * K
    perm = np.zeros(1 << K, dtype=np.int64)
    for idx in range(1 << K):
        pos = 0
        for k in range(K):
            pos = pos * 2 + int(bits[idx, k])
        perm[pos] = idx
    nonempty = sorted_ok[perm].reshape(shape2)
    and_m = mats[perm].reshape(shape2)
    or_m = and_m.copy()
    full = (1 << K) - 1
    for axis in range(K):
        ne0 = np.take(nonempty, [0], axis=axis)
        ne1 = np.take(nonempty, [1], axis=axis)
        a0 = np.take(and_m, [0], axis=axis)
        a1 = np.take(and_m, [1], axis=axis)
        o0 = np.take(or_m, [0], axis=axis)
        o1 = np.take(or_m, [1], axis=axis)
        a0 = np.where(ne0, a0, full)
        a1 = np.where(ne1, a1, full)
        o0 = np.where(ne0, o0, 0)
        o1 = np.where(ne1, o1, 0)
        nonempty = np.concatenate([nonempty, ne0 | ne1], axis=axis)
        and_m = np.concatenate([and_m, a0 & a1], axis=axis)
        or_m = np.concatenate([or_m, o0 | o1], axis=axis)
    nonempty = nonempty.reshape(-1)
    and_m = and_m.reshape(-1)
    or_m = or_m.reshape(-1)
    free_mask = np.zeros(3 ** K, dtype=np.int64)
    digits = np.arange(3 ** K, dtype=np.int64)
    for k in range(K - 1, -1, -1):
        free_mask |= (digits % 3 == 2).astype(np.int64) << k
        digits //= 3
    fix1 = np.where(nonempty, and_m & free_mask, 0)
    fix0 = np.where(nonempty, ~or_m & free_mask & full, 0)
    return nonempty, fix0, fix1


def count_orbits(m: int, n: int) -> int:
    """Number of column-permutation orbits of m x n binary matrices.

    Computed from the multiset formula and by hashing canonical forms of all
    2**(m*n) matrices; raises if the two disagree.
    """
    formula = math.comb(2 ** m + n - 1, n)
    if m * n > 20:
        raise ValueError("enumeration limited to 20 cells")
    seen = set()
    for bits in itertools.product((0, 1), repeat=m * n):
        cols = tuple(sorted(tuple(bits[i * n + j] for i in range(m)) for j in range(n)))
        seen.add(cols)
    if len(seen) != formula:
        raise AssertionError(f"orbit count mismatch: formula {formula}, enumeration {len(seen)}")
    return formula


def _unit_columns(T: int, min_up: int, min_down: int) -> list:
    """Every on/off pattern of one unit that satisfies min-up and min-down
    with the cheapest start-up choice (nothing started in period 0)."""
    ok = []
    for bits in itertools.product((0, 1), repeat=T):
        starts = [0] + [max(0, bits[t] - bits[t - 1]) for t in range(1, T)]
        good = True
        for t in range(min_up - 1, T):
            if sum(starts[t - min_up + 1:t + 1]) > bits[t]:
                good = False
                break
        if good:
            for t in range(min_down - 1, T):
                before = bits[t - min_down] if t - min_down >= 0 else 0
                if sum(starts[t - min_down + 1:t + 1]) > 1 - before:
                    good = False
                    break
        if good:
            ok.append((bits, sum(starts)))
    return ok


def unit_patterns(T: int, min_up: int, min_down: int) -> list:
    """Feasible on/off patterns of a single unit over T periods."""
    return [bits for bits, _ in _unit_columns(T, min_up, min_down)]


def _dispatch_cost(units, demand: float, mask: int) -> float:
    on = [j for j in range(len(units)) if mask >> j & 1]
    cap = sum(units[j].pmax for j in on)
    if cap < demand - 1e-9 * (1.0 + demand):
        return math.inf
    cost = sum(units[j].pmin * units[j].power_cost for j in on)
    rest = demand - sum(units[j].pmin for j in on)
    for j in sorted(on, key=lambda k: (units[k].power_cost, k)):
        if rest <= 0:
            break
        add = min(rest, units[j].pmax - units[j].pmin)
        cost += add * units[j].power_cost
        rest -= add
    return cost


@dataclass
class MucpOptimum:
    feasible: bool
    objective: float = math.inf
    x: Optional[list] = None


def brute_force_mucp(inst, max_cells: int = 24) -> MucpOptimum:
    """Exhaustive optimum of a unit-commitment instance.

    Enumerates every commitment grid, keeps those meeting min-up/min-down with
    minimal start-ups, dispatches power greedily by marginal cost and returns
    the cheapest.
    """
    n, T = inst.n, inst.T
    if n * T > max_cells:
        raise ValueError(f"{n}x{T} grid too large for enumeration")
    units = inst.units()
    disp = np.array([[_dispatch_cost(units, inst.demand[t], mask) for mask in range(1 << n)]
                     for t in range(T)])
    per_unit = []
    for j, ut in enumerate(units):
        cols = _unit_columns(T, ut.min_up, ut.min_down)
        bits = np.array([c for c, _ in cols], dtype=np.int64).reshape(len(cols), T)
        cost = np.array([ut.fixed_cost * sum(c) + ut.startup_cost * s for c, s in cols])
        per_unit.append((bits << j, cost, bits))
    # combine all but the last unit explicitly, the last one vectorised
    masks = np.zeros((1, T), dtype=np.int64)
    cost = np.zeros(1)
    choice = np.zeros((1, 0), dtype=np.int64)
    for bits, ucost, _ in per_unit[:-1]:
        k = len(ucost)
        masks = (masks[:, None, :] | bits[None, :, :]).reshape(-1, T)
        cost = (cost[:, None] + ucost[None, :]).reshape(-1)
        choice = np.concatenate([np.repeat(choice, k, axis=0),
                                 np.tile(np.arange(k), len(choice))[:, None]], axis=1)
    best = math.inf
    best_pick = None
    last_bits, last_cost, _ = per_unit[-1]
    trange = np.arange(T)
    for k in range(len(last_cost)):
        m = masks | last_bits[k][None, :]
        total = cost + last_cost[k] + disp[trange[None, :], m].sum(axis=1)
        i = int(np.argmin(total))
        if total[i] < best:
            best = float(total[i])
            best_pick = (i, k)
    if best_pick is None or not math.isfinite(best):
        return MucpOptimum(False)
    i, k = best_pick
    picks = list(choice[i]) + [k]
    x = [[int(per_unit[j][2][picks[j]][t]) for j in range(n)] for t in range(T)]
    return MucpOptimum(True, best, x)


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _apply_move(X, rows, cols, perm):
    Y = [list(r) for r in X]
    for r in rows:
        old = [X[r][c] for c in cols]
        for k, c in enumerate(cols):
            Y[r][c] = old[perm[k]]
    return tuple(tuple(r) for r in Y)


def generalized_orbit_closure(solutions, scopes) -> list:
    """Partition ``solutions`` into generalized orbits.

    Each solution is linked to its image under every move of every scope that
    contains it; moves default to adjacent column transpositions on the scope
    rows.  ``scopes`` is a list of ``SubSymScope`` or a callable mapping a
    matrix to the scopes containing it.  Images outside the list are ignored.
    Returns the classes as lists of matrices, in first-appearance order.
    """
    sols = [tuple(tuple(r) for r in X) for X in solutions]
    if len(sols) > 10**4:
        raise ValueError("closure limited to 10^4 solutions")
    index = {X: i for i, X in enumerate(sols)}
    uf = _UnionFind(len(sols))
    for i, X in enumerate(sols):
        if callable(scopes):
            active = scopes(X)
        else:
            active = [s for s in scopes if s.member is None or s.member(X)]
        for s in active:
            k = len(s.cols)
            moves = s.moves or tuple(
                tuple(a + 1 if q == a else a if q == a + 1 else q for q in range(k))
                for a in range(k - 1))
            for perm in moves:
                j = index.get(_apply_move(X, s.rows, s.cols, perm))
                if j is not None:
                    uf.union(i, j)
    classes = {}
    for i, X in enumerate(sols):
        classes.setdefault(uf.find(i), []).append(X)
    return list(classes.values())


def _ready_groups(X, t: int, min_up: int, min_down: int):
    """Columns of complete matrix X that are down on [t-min_down, t-1]
    (before the horizon counts as down) and columns up on [t-min_up, t-1]."""
    n = len(X[0])
    down = [c for c in range(n) if all(X[s][c] == 0 for s in range(max(0, t - min_down), t))]
    up = [c for c in range(n) if t >= min_up and all(X[s][c] == 1 for s in range(t - min_up, t))]
    return down, up


def is_sub_orbitope_member(X, min_up: int, min_down: int, row_order=None) -> bool:
    """X is sorted on every tail whose columns are all ready to start, or all
    ready to stop, and on the whole matrix.  ``row_order`` (default natural)
    decides row significance; rows missing from it are ignored."""
    T = len(X)
    order = list(range(T)) if row_order is None else list(row_order)
    groups = [(0, list(range(len(X[0]))))]
    for t in range(T):
        down, up = _ready_groups(X, t, min_up, min_down)
        groups += [(t, down), (t, up)]
    for t, cols in groups:
        rows = [r for r in order if r >= t]
        seq = [[X[r][c] for r in rows] for c in cols]
        if not is_sorted_columns(seq):
            return False
    return True


def feasible_blocks(zeros, ones, T: int, n: int, min_up: int, min_down: int):
    """Yield every complete T x n commitment block that matches the fixed
    cells and satisfies min-up/min-down unit by unit."""
    cols = []
    for c in range(n):
        options = []
        for bits, _ in _unit_columns(T, min_up, min_down):
            if any(bits[r] != 0 for r, cc in zeros if cc == c):
                continue
            if any(bits[r] != 1 for r, cc in ones if cc == c):
                continue
            options.append(bits)
        cols.append(options)
    for pick in itertools.product(*cols):
        yield [[pick[c][t] for c in range(n)] for t in range(T)]


def enumerate_sub_orbitope(zeros, ones, T: int, n: int, min_up: int, min_down: int,
                           row_order=None) -> list:
    """Feasible completions (see ``feasible_blocks``) inside the full
    sub-orbitope."""
    return [X for X in feasible_blocks(zeros, ones, T, n, min_up, min_down)
            if is_sub_orbitope_member(X, min_up, min_down, row_order)]


@dataclass
class SweepReport:
    faces: int = 0
    mismatches: int = 0
    shapes: list = field(default_factory=list)
    examples: list = field(default_factory=list)  # (m, n, face digits)


def sweep_shapes(max_cells: int) -> list:
    return [(m, n) for m in range(1, max_cells + 1) for n in range(1, max_cells + 1)
            if m * n <= max_cells]


def sweep_faces(max_cells: int = 12, shapes=None, on_shape=None) -> SweepReport:
    """Compare the kernel with ``face_fixing_table`` on every face of every
    shape with at most ``max_cells`` cells (or of the given ``shapes``)."""
    report = SweepReport()
    for m, n in shapes if shapes is not None else sweep_shapes(max_cells):
        feasible, fix0, fix1 = face_fixing_table(m, n)
        view = MatrixView.full(m, n)
        bad = 0
        for idx, digits in enumerate(itertools.product(range(3), repeat=m * n)):
            res = compute_fixing_matrix(PartialMatrix(m, n, digits), view)
            if res.feasible != bool(feasible[idx]):
                ok = False
            elif not res.feasible:
                ok = True
            else:
                ok = (sum(1 << (r * n + c) for r, c in res.fix0) == fix0[idx]
                      and sum(1 << (r * n + c) for r, c in res.fix1) == fix1[idx])
            if not ok:
                bad += 1
                if len(report.examples) < 5:
                    report.examples.append((m, n, digits))
        report.faces += 3 ** (m * n)
        report.mismatches += bad
        report.shapes.append((m, n))
        if on_shape is not None:
            on_shape(m, n, 3 ** (m * n), bad)
    return report
