"""Depth-first branch-and-bound with orbitopal fixing.

Symmetry handling methods:

    none   plain search
    sof    fixing on each block, rows in natural order
    dof    fixing on each block, rows in the order branching first touched them
    sof-s  sof plus fixing on the sub-symmetry scopes found at each node
    dof-s  dof plus the same scopes
    mob    orbital branching over columns with identical fixing pattern
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .lp import LinearRow, LpMatrix
from .problem import BinaryProgram, NodeState, extend_row_order
from .subsym import apply_scope_fixing, detect_program_scopes, whole_block_scope

log = logging.getLogger("orbifix.search")

METHODS = ("none", "sof", "dof", "sof-s", "dof-s", "mob")
BRANCH_RULES = ("fractional", "startup", "first", "random")


@dataclass
class SolveConfig:
    method: str = "none"
    rel_gap: float = 1e-7
    abs_tol: float = 1e-9
    int_tol: float = 1e-6
    node_limit: int = 10**7
    time_limit: float = 3600.0
    branching: str = "fractional"
    seed: int = 0
    enumerate_all: bool = False
    lp_method: str = "highs"
    heuristic: bool = True  # try the program's rounding at fractional nodes
    brancher: Optional[Callable] = None  # (program, node, values, rng) -> decision

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; pick one of {METHODS}")
        if self.branching not in BRANCH_RULES:
            raise ValueError(f"unknown branching rule {self.branching!r}")

    @property
    def fixing(self) -> bool:
        return self.method in ("sof", "dof", "sof-s", "dof-s")

    @property
    def dynamic(self) -> bool:
        return self.method in ("dof", "dof-s")

    @property
    def scoped(self) -> bool:
        return self.method in ("sof-s", "dof-s")


@dataclass(frozen=True)
class SingleVar:
    """Disjunction var = 1 or var = 0; ``row`` is None off the grid."""

    var: int
    row: Optional[int] = None
    col: Optional[int] = None


@dataclass(frozen=True)
class RowSet:
    """Disjunction sum(coeffs * x) >= threshold + 1 or <= threshold; the rows
    are appended to the dynamic order in the listed order."""

    rows: tuple
    coeffs: tuple  # ((var, coefficient), ...)
    threshold: int = 0

    def as_rows(self):
        coeffs = dict(self.coeffs)
        return (LinearRow(coeffs, ">=", self.threshold + 1, "branch_up"),
                LinearRow(coeffs, "<=", self.threshold, "branch_down"))


@dataclass(frozen=True)
class OrbitBranch:
    """Orbital disjunction on a row: first orbit cell = 1, or all orbit cells = 0."""

    row: int
    block: int
    orbit: tuple  # local columns, ascending


BranchDecision = Union[SingleVar, RowSet, OrbitBranch]


@dataclass
class SolveStats:
    nodes: int = 0
    fixings: int = 0
    incumbent: float = math.inf
    bound: float = -math.inf
    wall_time: float = 0.0
    status: str = "unknown"
    max_depth: int = 0

    def as_block(self) -> str:
        return "\n".join([
            f"nodes={self.nodes}",
            f"fixings={self.fixings}",
            f"cpu_s={self.wall_time:.3f}",
            f"obj={self.incumbent!r}",
            f"bound={self.bound!r}",
            f"status={self.status}",
        ])


@dataclass
class SolveResult:
    stats: SolveStats
    x: Optional[np.ndarray] = None
    solutions: list = field(default_factory=list)


@dataclass
class NodeOutcome:
    kind: str  # "pruned", "integral", "branched", "leaf"
    children: list = field(default_factory=list)
    values: Optional[np.ndarray] = None
    bound: float = -math.inf
    fixings: int = 0
    reason: str = ""


def update_row_order(parent_order: Sequence[int], decision: BranchDecision) -> tuple:
    if isinstance(decision, SingleVar):
        rows = () if decision.row is None else (decision.row,)
    elif isinstance(decision, RowSet):
        rows = decision.rows
    else:
        rows = (decision.row,)
    return extend_row_order(parent_order, rows)


def mob_orbit(program: BinaryProgram, node: NodeState, block_index: int, col: int) -> tuple:
    """Columns of the block whose fixing pattern (grid and linked variables)
    equals that of ``col`` on every row."""
    block = program.blocks[block_index]
    fixed = node.fixed

    def pattern(c):
        key = [fixed.get(row[c], 2) for row in block.grid]
        if block.linked is not None:
            for row in block.linked:
                key.extend(fixed.get(v, 2) for v in row[c])
        return key

    ref = pattern(col)
    return tuple(c for c in range(block.cols) if pattern(c) == ref)


def mob_children(program: BinaryProgram, node: NodeState, decision: OrbitBranch):
    grid = program.blocks[decision.block].grid[decision.row]
    first = grid[decision.orbit[0]]
    left = node.child({first: 1})
    right = node.child({grid[c]: 0 for c in decision.orbit})
    return left, right


def _fractionality(v: float) -> float:
    return abs(v - round(v))


def select_branch_variable(program: BinaryProgram, node: NodeState, values,
                           rule: str = "fractional", int_tol: float = 1e-6,
                           rng: Optional[np.random.Generator] = None) -> BranchDecision:
    """Branching decision for a node whose LP point has a fractional binary.

    ``fractional`` takes the grid cell closest to 1/2, ties by smallest
    (row, column), then off-grid binaries.  ``startup`` prefers the start-up
    variable closest to 1/2 whose commitment step x(t) - x(t-1) is
    fractional and branches on that step.  ``first`` and ``random`` pick a
    free grid cell regardless of the LP point (enumeration).
    """
    fixed = node.fixed
    if rule in ("first", "random"):
        free = [(r, program.blocks[b].col_offset + c, var)
                for var, (b, r, c) in program.cell_of.items() if var not in fixed]
        if not free:
            raise ValueError("no free grid cell to branch on")
        free.sort()
        r, col, var = free[0] if rule == "first" else free[int(rng.integers(len(free)))]
        return SingleVar(var, r, col)

    if rule == "startup":
        best = None
        for uvar, (b, t, c) in program.startup_vars.items():
            frac = _fractionality(values[uvar])
            if frac <= int_tol or uvar in fixed:
                continue
            grid = program.blocks[b].grid
            now, before = grid[t][c], grid[t - 1][c]
            step = values[now] - values[before]
            if step <= int_tol or step >= 1 - int_tol:
                continue
            key = (-frac, t, program.blocks[b].col_offset + c)
            if best is None or key < best[0]:
                best = (key, t, now, before)
        if best is not None:
            _, t, now, before = best
            return RowSet((t - 1, t), ((now, 1.0), (before, -1.0)), 0)

    best = None
    for var, (b, r, c) in program.cell_of.items():
        frac = _fractionality(values[var])
        if frac > int_tol:
            key = (-frac, r, program.blocks[b].col_offset + c)
            if best is None or key < best[0]:
                best = (key, var, r, program.blocks[b].col_offset + c)
    if best is not None:
        return SingleVar(best[1], best[2], best[3])
    others = [(-_fractionality(values[k]), k) for k in np.flatnonzero(program.binary)
              if k not in program.cell_of and _fractionality(values[k]) > int_tol]
    if not others:
        raise ValueError("all binaries are integral; nothing to branch on")
    return SingleVar(int(min(others)[1]))


def propagate_rows(rows: Sequence[LinearRow], binary, fixed: dict, tol: float = 1e-9) -> bool:
    """Activity-based fixing on rows over binary variables; False if a row
    cannot be satisfied.  Rows touching non-binary variables are skipped."""
    rows = [r for r in rows if all(binary[k] for k in r.coeffs)]
    changed = True
    while changed:
        changed = False
        for row in rows:
            lo = hi = 0.0
            for k, a in row.coeffs.items():
                v = fixed.get(k)
                if v is None:
                    lo += min(0.0, a)
                    hi += max(0.0, a)
                else:
                    lo += a * v
                    hi += a * v
            checks = []
            if row.sense in ("<=", "="):
                if lo > row.rhs + tol:
                    return False
                checks.append(("<=", lo))
            if row.sense in (">=", "="):
                if hi < row.rhs - tol:
                    return False
                checks.append((">=", hi))
            for sense, act in checks:
                for k, a in row.coeffs.items():
                    if k in fixed or a == 0:
                        continue
                    if sense == "<=" and act + abs(a) > row.rhs + tol:
                        fixed[k] = 0 if a > 0 else 1
                        changed = True
                    elif sense == ">=" and act - abs(a) < row.rhs - tol:
                        fixed[k] = 1 if a > 0 else 0
                        changed = True
                if changed:
                    break
            if changed:
                break
    return True


class BranchAndBound:
    def __init__(self, program: BinaryProgram, config: SolveConfig = SolveConfig()):
        self.program = program
        self.config = config
        self.lp = LpMatrix(program.objective, program.rows, config.lp_method)
        self.rng = np.random.default_rng(config.seed)
        self.stats = SolveStats()
        self.best_x: Optional[np.ndarray] = None
        self.solutions: list = []
        self._rounded: set = set()

    # -- node pieces -------------------------------------------------------

    def _prune_level(self) -> float:
        inc = self.stats.incumbent
        if not math.isfinite(inc):
            return math.inf
        return inc - max(self.config.abs_tol, self.config.rel_gap * abs(inc))

    def symmetry_fixing(self, node: NodeState) -> Optional[int]:
        """Apply the configured orbitopal fixing; None when the node is cut off."""
        cfg, prog = self.config, self.program
        if not cfg.fixing:
            return 0
        blocks = prog.blocks
        if cfg.scoped:
            def redetect(fixed):
                return detect_program_scopes(blocks, fixed, node.broken)
            scopes = redetect(node.fixed)
        else:
            redetect = None
            scopes = [whole_block_scope(b, blk.rows, blk.cols)
                      for b, blk in enumerate(blocks) if blk.cols >= 2 and b not in node.broken]
        res = apply_scope_fixing(node, scopes, blocks, cfg.dynamic, redetect)
        if not res.feasible:
            return None
        return res.count

    def _bounds(self, fixed: dict):
        lower = self.program.lower.copy()
        upper = self.program.upper.copy()
        if fixed:
            idx = np.fromiter(fixed.keys(), dtype=np.int64, count=len(fixed))
            val = np.fromiter(fixed.values(), dtype=float, count=len(fixed))
            lower[idx] = val
            upper[idx] = val
        return lower, upper

    def _grid_complete(self, node: NodeState) -> bool:
        fixed = node.fixed
        return all(var in fixed for var in self.program.cell_of)

    def process_node(self, node: NodeState) -> NodeOutcome:
        cfg, prog = self.config, self.program
        if node.extra_rows and not propagate_rows(node.extra_rows, prog.binary, node.fixed):
            return NodeOutcome("pruned", reason="branching rows infeasible")
        fixings = 0
        while True:
            found = self.symmetry_fixing(node)
            if found is None:
                return NodeOutcome("pruned", fixings=fixings, reason="orbitope infeasible")
            fixings += found
            if not node.extra_rows:
                break
            known = len(node.fixed)
            if not propagate_rows(node.extra_rows, prog.binary, node.fixed):
                return NodeOutcome("pruned", fixings=fixings, reason="branching rows infeasible")
            if len(node.fixed) == known:
                break

        if cfg.enumerate_all:
            return self._enumeration_step(node, fixings)

        lower, upper = self._bounds(node.fixed)
        res = self.lp.solve(lower, upper, node.extra_rows)
        if not res.optimal:
            return NodeOutcome("pruned", fixings=fixings, reason=f"lp {res.status}")
        node.bound = res.objective
        if res.objective >= self._prune_level():
            return NodeOutcome("pruned", bound=res.objective, fixings=fixings, reason="bound")
        values = res.x
        binv = values[prog.binary]
        if np.all(np.abs(binv - np.round(binv)) <= cfg.int_tol):
            return NodeOutcome("integral", values=values, bound=res.objective, fixings=fixings)
        if cfg.heuristic and prog.rounding is not None:
            self._try_rounding(values)
        return self._branch(node, values, res.objective, fixings)

    def _enumeration_step(self, node: NodeState, fixings: int) -> NodeOutcome:
        prog = self.program
        if prog.rows or node.extra_rows:
            lower, upper = self._bounds(node.fixed)
            res = self.lp.solve(lower, upper, node.extra_rows)
            if not res.optimal:
                return NodeOutcome("pruned", fixings=fixings, reason=f"lp {res.status}")
            values = res.x
        else:
            values = np.where(prog.objective >= 0, prog.lower, prog.upper).astype(float)
            for k, v in node.fixed.items():
                values[k] = v
        if self._grid_complete(node):
            return NodeOutcome("leaf", values=values, fixings=fixings)
        cfg = self.config
        if cfg.brancher is not None:
            decision = cfg.brancher(prog, node, values, self.rng)
        else:
            rule = cfg.branching if cfg.branching in ("first", "random") else "first"
            decision = select_branch_variable(prog, node, values, rule, cfg.int_tol, self.rng)
        decision = self._orbital(node, decision)
        return NodeOutcome("branched", children=self._children(node, decision), fixings=fixings)

    def _orbital(self, node: NodeState, decision: BranchDecision) -> BranchDecision:
        prog = self.program
        if self.config.method == "mob" and isinstance(decision, SingleVar) and decision.var in prog.cell_of:
            b, r, c = prog.cell_of[decision.var]
            return OrbitBranch(r, b, mob_orbit(prog, node, b, c))
        return decision

    def _branch(self, node: NodeState, values, bound: float, fixings: int) -> NodeOutcome:
        cfg, prog = self.config, self.program
        if cfg.brancher is not None:
            decision = cfg.brancher(prog, node, values, self.rng)
        else:
            rule = cfg.branching if cfg.branching in ("fractional", "startup") else "fractional"
            decision = select_branch_variable(prog, node, values, rule, cfg.int_tol, self.rng)
        decision = self._orbital(node, decision)
        return NodeOutcome("branched", children=self._children(node, decision), bound=bound,
                           fixings=fixings)

    def _children(self, node: NodeState, decision: BranchDecision) -> list:
        prog = self.program
        order = update_row_order(node.row_order, decision)
        if isinstance(decision, OrbitBranch):
            left, right = mob_children(prog, node, decision)
            self.stats.fixings += len(decision.orbit) - 1
        elif isinstance(decision, RowSet):
            up, down = decision.as_rows()
            left = node.child({}, decision.rows, (up,))
            right = node.child({}, decision.rows, (down,))
        else:
            broken = ()
            if decision.var not in prog.cell_of:
                owner = prog.linked_owner.get(decision.var)
                if owner is not None:
                    broken = (owner,)
            left = node.child({decision.var: 1}, (), (), broken)
            right = node.child({decision.var: 0}, (), (), broken)
        left.row_order = right.row_order = order
        return [left, right]

    def _try_rounding(self, values) -> None:
        for fixes in self.program.rounding(values):
            key = tuple(sorted(fixes.items()))
            if key in self._rounded:
                continue
            self._rounded.add(key)
            res = self.lp.solve(*self._bounds(fixes))
            if not res.optimal or res.objective >= self.stats.incumbent - self.config.abs_tol:
                continue
            binv = res.x[self.program.binary]
            if np.all(np.abs(binv - np.round(binv)) <= self.config.int_tol):
                self.stats.incumbent = res.objective
                self.best_x = res.x
                log.debug("rounding found incumbent %.6f", res.objective)

    # -- main loop ---------------------------------------------------------

    def _accept(self, values) -> None:
        prog = self.program
        lower, upper = self._bounds({})
        rounded = values.copy()
        rounded[prog.binary] = np.round(values[prog.binary])
        lower[prog.binary] = upper[prog.binary] = rounded[prog.binary]
        res = self.lp.solve(lower, upper)
        if res.optimal:
            rounded, value = res.x, res.objective
        else:
            value = float(prog.objective @ values)
            rounded = values
        if value < self.stats.incumbent - self.config.abs_tol:
            self.stats.incumbent = value
            self.best_x = rounded

    def solve(self) -> SolveResult:
        cfg, stats = self.config, self.stats
        start = time.perf_counter()
        stack = [NodeState()]
        status = None
        while stack:
            if stats.nodes >= cfg.node_limit:
                status = "node_limit"
                break
            if time.perf_counter() - start > cfg.time_limit:
                status = "time_limit"
                break
            node = stack.pop()
            if not cfg.enumerate_all and node.bound >= self._prune_level():
                continue
            stats.nodes += 1
            stats.max_depth = max(stats.max_depth, node.depth)
            out = self.process_node(node)
            stats.fixings += out.fixings
            log.debug("node=%d depth=%d action=%s fixings=%d bound=%.6g %s",
                      stats.nodes, node.depth, out.kind, out.fixings, out.bound, out.reason)
            if out.kind == "integral":
                self._accept(out.values)
            elif out.kind == "leaf":
                self.solutions.append(tuple(int(round(out.values[v])) for v in sorted(self.program.cell_of)))
            elif out.kind == "branched":
                for child in out.children:
                    child.bound = out.bound
                stack.extend(reversed(out.children))
        stats.wall_time = time.perf_counter() - start
        if cfg.enumerate_all:
            stats.status = status or "enumerated"
        elif status is None:
            stats.status = "optimal" if self.best_x is not None else "infeasible"
            stats.bound = stats.incumbent
        else:
            stats.status = status
            open_bounds = [n.bound for n in stack]
            stats.bound = min(open_bounds + [stats.incumbent]) if open_bounds else stats.incumbent
        return SolveResult(stats, self.best_x, self.solutions)


def solve(program: BinaryProgram, config: Optional[SolveConfig] = None, **kwargs) -> SolveResult:
    """Run the search; keyword arguments override ``SolveConfig`` fields."""
    if config is None:
        config = SolveConfig(**kwargs)
    elif kwargs:
        raise TypeError("pass either a config or keyword overrides, not both")
    return BranchAndBound(program, config).solve()
