"""Sub-symmetry scopes and full sub-orbitope fixing.

A scope is a set of columns of one block that may swap their values on a set
of rows (the tails from some period on) without changing feasibility or cost,
as long as the solution lies in the scope's defining subset.  For unit
commitment the subsets are "ready to start" (down long enough) and "ready to
stop" (up long enough) at a period, plus the whole block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .kernel import ONE, ZERO, MatrixView, PartialMatrix, compute_fixing_matrix
from .problem import NodeState, SymmetricBlock

START_READY = "StartReady"
SHUT_READY = "ShutReady"
WHOLE_TYPE = "WholeType"
CUSTOM = "Custom"


@dataclass(frozen=True)
class SubSymScope:
    """Columns ``cols`` may be permuted on rows ``rows``.

    ``rows`` is in natural ascending order; views reorder them when a dynamic
    row order is active.  ``member`` optionally decides membership of a
    complete matrix; ``moves`` optionally replaces adjacent transpositions by
    explicit permutations (new column k takes old column ``moves[i][k]``,
    positions relative to ``cols``).
    """

    block: int
    rows: tuple
    cols: tuple
    kind: str = CUSTOM
    start: int = 0
    member: Optional[Callable] = field(default=None, compare=False, hash=False)
    moves: tuple = field(default=(), compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(self.cols))
        if not self.rows:
            raise ValueError("scope needs at least one row")
        if len(set(self.cols)) != len(self.cols):
            raise ValueError("duplicate column in scope")

    @property
    def key(self) -> tuple:
        return (self.block, self.rows, self.cols)

    def view(self, row_order: Optional[Sequence[int]] = None) -> MatrixView:
        if row_order is None:
            return MatrixView(self.rows, self.cols)
        inside = set(self.rows)
        return MatrixView(tuple(r for r in row_order if r in inside), self.cols)


ScopeSet = list


def whole_block_scope(block_index: int, rows: int, cols: int) -> SubSymScope:
    return SubSymScope(block_index, tuple(range(rows)), tuple(range(cols)), WHOLE_TYPE, 0)


def detect_block_scopes(M: PartialMatrix, min_up: int, min_down: int,
                        block_index: int = 0) -> ScopeSet:
    """Ready-to-start and ready-to-stop scopes of one block plus the whole
    block.  Periods before the horizon count as down."""
    T, n = M.rows, M.cols
    scopes = []
    if n < 2:
        return scopes
    scopes.append(whole_block_scope(block_index, T, n))
    zero_run = [0] * n
    one_run = [0] * n
    cells = M.cells
    for t in range(T):
        tail = tuple(range(t, T))
        down = tuple(c for c in range(n) if zero_run[c] >= min(min_down, t))
        if len(down) >= 2:
            scopes.append(SubSymScope(block_index, tail, down, START_READY, t))
        if t >= min_up:
            up = tuple(c for c in range(n) if one_run[c] >= min_up)
            if len(up) >= 2:
                scopes.append(SubSymScope(block_index, tail, up, SHUT_READY, t))
        base = t * n
        for c in range(n):
            v = cells[base + c]
            zero_run[c] = zero_run[c] + 1 if v == ZERO else 0
            one_run[c] = one_run[c] + 1 if v == ONE else 0
    return scopes


def detect_program_scopes(blocks: Sequence[SymmetricBlock], fixed: dict,
                          skip: Iterable[int] = ()) -> ScopeSet:
    skip = set(skip)
    scopes = []
    for b, block in enumerate(blocks):
        if b in skip or block.cols < 2:
            continue
        if block.windows is None:
            scopes.append(whole_block_scope(b, block.rows, block.cols))
        else:
            scopes.extend(detect_block_scopes(block.matrix(fixed), *block.windows, block_index=b))
    return scopes


def detect_mucp_scopes(node: NodeState, instance) -> ScopeSet:
    """Scopes active at ``node`` for a unit-commitment instance, one block per
    unit type, using the variable layout of ``mucp.build_model``."""
    n, T = instance.n, instance.T
    scopes = []
    offset = 0
    for h, ut in enumerate(instance.types):
        M = PartialMatrix(T, ut.count)
        for t in range(T):
            for c in range(ut.count):
                v = node.fixed.get(t * n + offset + c)
                if v is not None:
                    M[t, c] = v
        scopes.extend(detect_block_scopes(M, ut.min_up, ut.min_down, h))
        offset += ut.count
    return scopes


def scope_contains(X, scope: SubSymScope, min_up: int, min_down: int) -> bool:
    """Membership of a complete block matrix (rows of bits) in a scope's
    defining subset."""
    if scope.member is not None:
        return bool(scope.member(X))
    t = scope.start
    if scope.kind == START_READY:
        lo = max(0, t - min_down)
        return all(X[s][c] == 0 for c in scope.cols for s in range(lo, t))
    if scope.kind == SHUT_READY:
        return t >= min_up and all(X[s][c] == 1 for c in scope.cols for s in range(t - min_up, t))
    return True


@dataclass
class ScopeFixing:
    feasible: bool
    fix0: set = field(default_factory=set)
    fix1: set = field(default_factory=set)
    passes: int = 0

    @property
    def count(self) -> int:
        return len(self.fix0) + len(self.fix1)


def apply_scope_fixing(node: NodeState, scopes: ScopeSet, blocks: Sequence[SymmetricBlock],
                       dynamic: bool = False,
                       redetect: Optional[Callable[[dict], ScopeSet]] = None,
                       max_passes: Optional[int] = None) -> ScopeFixing:
    """Run the kernel on every scope view and write the fixings into
    ``node.fixed``, repeating until nothing changes.

    In dynamic mode each view keeps only the scope rows present in
    ``node.row_order``, in that order.  ``redetect`` refreshes the scope list
    from the current fixings before every pass after the first.  ``max_passes``
    stops early (one pass is useful for comparisons).
    """
    out = ScopeFixing(True)
    mats = {}
    budget = sum(b.rows * b.cols for b in blocks) + 1
    if max_passes is not None:
        budget = min(budget, max_passes)
    current = scopes
    while out.passes < budget:
        out.passes += 1
        changed = False
        seen = set()
        for scope in current:
            if len(scope.cols) < 2 or scope.key in seen:
                continue
            seen.add(scope.key)
            block = blocks[scope.block]
            M = mats.get(scope.block)
            if M is None:
                M = mats[scope.block] = block.matrix(node.fixed)
            view = scope.view(node.row_order if dynamic else None)
            if not view.row_order:
                continue
            res = compute_fixing_matrix(M, view)
            if not res.feasible:
                out.feasible = False
                return out
            grid = block.grid
            for value, cells, sink in ((ZERO, res.fix0, out.fix0), (ONE, res.fix1, out.fix1)):
                for r, c in cells:
                    M[r, c] = value
                    var = grid[r][c]
                    node.fixed[var] = value
                    sink.add(var)
                    changed = True
        if not changed:
            break
        if redetect is not None:
            current = redetect(node.fixed)
    return out


def lex_less(a: Sequence[int], b: Sequence[int]) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def generalized_representative(X, scopes, max_steps: Optional[int] = None):
    """Swap adjacent scope columns (on the scope rows only) while some scope
    containing the matrix has a column lexicographically smaller than its
    right neighbour.

    ``scopes`` is a list of ``SubSymScope`` (columns and rows index ``X``
    directly; membership via ``member`` when given) or a callable returning
    the scopes that contain a given matrix.  Returns ``(matrix, swaps)``.
    """
    Y = [list(r) for r in X]
    m = len(Y)
    n = len(Y[0]) if m else 0
    limit = max_steps if max_steps is not None else 2 ** min(m * n, 40)
    steps = 0
    while True:
        if callable(scopes):
            active = scopes(Y)
        else:
            active = [s for s in scopes if s.member is None or s.member(Y)]
        move = None
        for s in active:
            for a, b in zip(s.cols, s.cols[1:]):
                if lex_less([Y[r][a] for r in s.rows], [Y[r][b] for r in s.rows]):
                    move = (s, a, b)
                    break
            if move:
                break
        if move is None:
            return Y, steps
        s, a, b = move
        for r in s.rows:
            Y[r][a], Y[r][b] = Y[r][b], Y[r][a]
        steps += 1
        if steps > limit:
            raise RuntimeError("representative search did not terminate")


def mucp_block_scopes(min_up: int, min_down: int, block_index: int = 0):
    """Callable mapping a complete block matrix to the scopes containing it."""
    def scopes_of(X):
        M = PartialMatrix.from_rows(X)
        return detect_block_scopes(M, min_up, min_down, block_index)
    return scopes_of


def in_sub_orbitope(X, scopes_of, row_order: Optional[Sequence[int]] = None) -> bool:
    """True when ``X`` is column-sorted inside every scope that contains it."""
    for s in scopes_of(X):
        rows = s.rows if row_order is None else [r for r in row_order if r in set(s.rows)]
        for a, b in zip(s.cols, s.cols[1:]):
            if lex_less([X[r][a] for r in rows], [X[r][b] for r in rows]):
                return False
    return True
