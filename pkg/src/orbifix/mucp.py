"""Min-up/min-down unit commitment: instances, model, generator, validation.

Indices are 0-based throughout.  Unit ``j`` of an instance with ``n`` units
and ``T`` periods owns variables

    x(t, j) = t*n + j            (unit up)
    u(t, j) = n*T + t*n + j      (unit started)
    p(t, j) = 2*n*T + t*n + j    (power output)

and units of one type occupy a contiguous range of columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .lp import LinearRow
from .problem import BinaryProgram, SymmetricBlock

TOL = 1e-8


@dataclass(frozen=True)
class UnitType:
    count: int
    pmin: float
    pmax: float
    min_up: int
    min_down: int
    fixed_cost: float
    startup_cost: float
    power_cost: float

    def check(self, T: int) -> None:
        if self.count < 1:
            raise ValueError("unit count must be positive")
        if not 0 <= self.pmin <= self.pmax:
            raise ValueError("need 0 <= Pmin <= Pmax")
        if not (1 <= self.min_up <= T and 1 <= self.min_down <= T):
            raise ValueError("min-up and min-down must lie in 1..T")
        if min(self.fixed_cost, self.startup_cost, self.power_cost) < 0:
            raise ValueError("costs must be non-negative")


@dataclass(frozen=True)
class MucpInstance:
    T: int
    types: tuple
    demand: tuple

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "demand", tuple(float(d) for d in self.demand))
        if len(self.demand) != self.T:
            raise ValueError("demand length must equal T")
        if any(d < 0 for d in self.demand):
            raise ValueError("demand must be non-negative")
        for ut in self.types:
            ut.check(self.T)

    @property
    def n(self) -> int:
        return sum(ut.count for ut in self.types)

    @property
    def type_offsets(self) -> list:
        out, k = [], 0
        for ut in self.types:
            out.append(k)
            k += ut.count
        return out

    def unit_type(self, j: int) -> UnitType:
        for ut, off in zip(self.types, self.type_offsets):
            if off <= j < off + ut.count:
                return ut
        raise IndexError(j)

    def units(self) -> list:
        return [ut for ut in self.types for _ in range(ut.count)]

    @property
    def total_capacity(self) -> float:
        return sum(ut.pmax * ut.count for ut in self.types)

    def x_var(self, t: int, j: int) -> int:
        return t * self.n + j

    def u_var(self, t: int, j: int) -> int:
        return self.n * self.T + t * self.n + j

    def p_var(self, t: int, j: int) -> int:
        return 2 * self.n * self.T + t * self.n + j


@dataclass
class MucpSolution:
    x: list
    u: list
    p: list
    objective: float

    @classmethod
    def from_vector(cls, inst: MucpInstance, values) -> "MucpSolution":
        n, T = inst.n, inst.T
        x = [[int(round(values[inst.x_var(t, j)])) for j in range(n)] for t in range(T)]
        u = [[int(round(values[inst.u_var(t, j)])) for j in range(n)] for t in range(T)]
        p = [[float(values[inst.p_var(t, j)]) for j in range(n)] for t in range(T)]
        return cls(x, u, p, objective_value(inst, x, u, p))


def objective_value(inst: MucpInstance, x, u, p) -> float:
    units = inst.units()
    total = 0.0
    for t in range(inst.T):
        for j, ut in enumerate(units):
            total += ut.fixed_cost * x[t][j] + ut.startup_cost * u[t][j] + ut.power_cost * p[t][j]
    return total


def build_model(inst: MucpInstance) -> BinaryProgram:
    n, T = inst.n, inst.T
    units = inst.units()
    N = 3 * n * T
    c = np.zeros(N)
    lower = np.zeros(N)
    upper = np.ones(N)
    binary = np.zeros(N, dtype=bool)
    names = [""] * N
    for t in range(T):
        for j, ut in enumerate(units):
            xv, uv, pv = inst.x_var(t, j), inst.u_var(t, j), inst.p_var(t, j)
            c[xv], c[uv], c[pv] = ut.fixed_cost, ut.startup_cost, ut.power_cost
            binary[xv] = binary[uv] = True
            upper[pv] = ut.pmax
            names[xv], names[uv], names[pv] = f"x[{t},{j}]", f"u[{t},{j}]", f"p[{t},{j}]"

    rows = []
    for j, ut in enumerate(units):
        L, ell = ut.min_up, ut.min_down
        for t in range(L - 1, T):
            coeffs = {inst.u_var(s, j): 1.0 for s in range(t - L + 1, t + 1)}
            coeffs[inst.x_var(t, j)] = -1.0
            rows.append(LinearRow(coeffs, "<=", 0.0, f"min_up[t={t},j={j}]"))
        for t in range(ell - 1, T):
            coeffs = {inst.u_var(s, j): 1.0 for s in range(t - ell + 1, t + 1)}
            if t - ell >= 0:
                coeffs[inst.x_var(t - ell, j)] = 1.0
            rows.append(LinearRow(coeffs, "<=", 1.0, f"min_down[t={t},j={j}]"))
        for t in range(1, T):
            rows.append(LinearRow(
                {inst.u_var(t, j): 1.0, inst.x_var(t, j): -1.0, inst.x_var(t - 1, j): 1.0},
                ">=", 0.0, f"logical[t={t},j={j}]"))
    for t in range(T):
        rows.append(LinearRow({inst.p_var(t, j): 1.0 for j in range(n)}, ">=",
                              inst.demand[t], f"demand[t={t}]"))
    for t in range(T):
        for j, ut in enumerate(units):
            pv, xv = inst.p_var(t, j), inst.x_var(t, j)
            rows.append(LinearRow({pv: 1.0, xv: -ut.pmax}, "<=", 0.0, f"pmax[t={t},j={j}]"))
            rows.append(LinearRow({pv: 1.0, xv: -ut.pmin}, ">=", 0.0, f"pmin[t={t},j={j}]"))

    blocks = []
    startup = {}
    for h, (ut, off) in enumerate(zip(inst.types, inst.type_offsets)):
        cols = range(off, off + ut.count)
        grid = [[inst.x_var(t, j) for j in cols] for t in range(T)]
        linked = [[[inst.u_var(t, j), inst.p_var(t, j)] for j in cols] for t in range(T)]
        blocks.append(SymmetricBlock(grid, f"type{h}", off, linked, (ut.min_up, ut.min_down)))
        for t in range(1, T):
            for pos, j in enumerate(cols):
                startup[inst.u_var(t, j)] = (h, t, pos)
    program = BinaryProgram(c, lower, upper, binary, rows, blocks, names, startup)
    program.rounding = lambda values: rounding_candidates(inst, values)
    return program


def greedy_dispatch(inst: MucpInstance, x) -> Optional[list]:
    """Cheapest power split for a fixed commitment, or None if demand cannot
    be met.  Committed units start at Pmin and are topped up by increasing
    marginal cost."""
    units = inst.units()
    order = sorted(range(inst.n), key=lambda j: (units[j].power_cost, j))
    p = []
    for t in range(inst.T):
        row = [units[j].pmin if x[t][j] else 0.0 for j in range(inst.n)]
        rest = inst.demand[t] - sum(row)
        for j in order:
            if rest <= 0:
                break
            if x[t][j]:
                add = min(rest, units[j].pmax - units[j].pmin)
                row[j] += add
                rest -= add
        if rest > TOL * (1.0 + inst.demand[t]):
            return None
        p.append(row)
    return p


def minimal_startups(x) -> list:
    """u(t) = max(0, x(t) - x(t-1)) with nothing started in the first period."""
    T = len(x)
    n = len(x[0]) if T else 0
    return [[0] * n] + [[max(0, x[t][j] - x[t - 1][j]) for j in range(n)] for t in range(1, T)]


def repair_commitment(inst: MucpInstance, x) -> list:
    """Switch units on until every min-up and min-down row holds for the
    minimal start-ups.  Only turns units on, so capacity never drops."""
    T = inst.T
    x = [list(row) for row in x]
    for j, ut in enumerate(inst.units()):
        L, ell = ut.min_up, ut.min_down
        changed = True
        while changed:
            changed = False
            col = [x[t][j] for t in range(T)]
            starts = [0] + [max(0, col[t] - col[t - 1]) for t in range(1, T)]
            for t in range(T):
                window = starts[max(0, t - L + 1):t + 1] if t >= L - 1 else ()
                if sum(window) > col[t]:
                    # run the unit from its first start in the window up to t
                    first = t - L + 1 + window.index(1)
                    for r in range(first, t + 1):
                        x[r][j] = 1
                    changed = True
                    break
                if t >= ell - 1:
                    window = range(max(0, t - ell + 1), t + 1)
                    before = col[t - ell] if t - ell >= 0 else 0
                    if sum(starts[s] for s in window) > 1 - before:
                        s = max(s for s in window if starts[s])
                        q = s - 1
                        while q >= 0 and not col[q]:
                            q -= 1
                        for r in range(q + 1, s):
                            x[r][j] = 1
                        changed = True
                        break
    return x


def round_commitment(inst: MucpInstance, values, threshold: float) -> list:
    """Commit units whose relaxed commitment reaches ``threshold``, add the
    most committed remaining units where capacity falls short of demand,
    then repair the min-up/min-down windows."""
    n, T = inst.n, inst.T
    units = inst.units()
    x = [[1 if values[inst.x_var(t, j)] >= threshold else 0 for j in range(n)] for t in range(T)]
    for t in range(T):
        cap = sum(units[j].pmax for j in range(n) if x[t][j])
        order = sorted((j for j in range(n) if not x[t][j]),
                       key=lambda j: -values[inst.x_var(t, j)])
        for j in order:
            if cap >= inst.demand[t]:
                break
            x[t][j] = 1
            cap += units[j].pmax
    return repair_commitment(inst, x)


def rounding_candidates(inst: MucpInstance, values, thresholds=(0.5, 1e-6)) -> list:
    """Fixings of x and minimal start-ups for each rounding threshold."""
    out = []
    for threshold in thresholds:
        x = round_commitment(inst, values, threshold)
        u = minimal_startups(x)
        fixes = {}
        for t in range(inst.T):
            for j in range(inst.n):
                fixes[inst.x_var(t, j)] = x[t][j]
                fixes[inst.u_var(t, j)] = u[t][j]
        out.append(fixes)
    return out


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_solution(inst: MucpInstance, sol: MucpSolution, tol: float = TOL) -> ValidationReport:
    n, T = inst.n, inst.T
    units = inst.units()
    bad = []
    for name, grid in (("x", sol.x), ("u", sol.u), ("p", sol.p)):
        if len(grid) != T or any(len(r) != n for r in grid):
            return ValidationReport(False, [f"{name} grid is not {T}x{n}"])
    x, u, p = sol.x, sol.u, sol.p
    for t in range(T):
        for j in range(n):
            if x[t][j] not in (0, 1) or u[t][j] not in (0, 1):
                bad.append(f"non-binary commitment at t={t}, j={j}")
    for j, ut in enumerate(units):
        L, ell = ut.min_up, ut.min_down
        for t in range(L - 1, T):
            if sum(u[s][j] for s in range(t - L + 1, t + 1)) > x[t][j]:
                bad.append(f"min_up violated at j={j}, t={t}")
        for t in range(ell - 1, T):
            before = x[t - ell][j] if t - ell >= 0 else 0
            if sum(u[s][j] for s in range(t - ell + 1, t + 1)) > 1 - before:
                bad.append(f"min_down violated at j={j}, t={t}")
        for t in range(1, T):
            if u[t][j] < x[t][j] - x[t - 1][j]:
                bad.append(f"logical violated at j={j}, t={t}")
        for t in range(T):
            slack = tol * (1.0 + ut.pmax)
            if p[t][j] > ut.pmax * x[t][j] + slack or p[t][j] < ut.pmin * x[t][j] - slack:
                bad.append(f"power bound violated at j={j}, t={t}")
    for t in range(T):
        if sum(p[t]) < inst.demand[t] - tol * (1.0 + inst.demand[t]):
            bad.append(f"demand not met at t={t}")
    value = objective_value(inst, x, u, p)
    if abs(value - sol.objective) > tol * (1.0 + abs(value)):
        bad.append(f"objective {sol.objective!r} differs from recomputed {value!r}")
    return ValidationReport(not bad, bad)


def permute_solution(sol: MucpSolution, perm: Sequence[int]) -> MucpSolution:
    """New column j takes old column perm[j] in x, u and p."""
    def move(grid):
        return [[row[k] for k in perm] for row in grid]
    return MucpSolution(move(sol.x), move(sol.u), move(sol.p), sol.objective)


# demand knots over one day: (period of day, counted from 1; fraction of capacity)
DAY_PROFILE = ((1, 0.4), (5, 0.4), (9, 0.9), (14, 0.6), (19, 0.9), (24, 0.4))


@dataclass(frozen=True)
class GeneratorConfig:
    pmax_range: tuple = (50.0, 500.0)
    pmin_fraction: tuple = (0.25, 0.6)
    max_window: int = 8
    fixed_cost_per_100: tuple = (20.0, 80.0)
    startup_multiple: tuple = (2.0, 10.0)
    power_cost_range: tuple = (25.0, 55.0)
    profile: tuple = DAY_PROFILE


def demand_profile(T: int, capacity: float, profile=DAY_PROFILE) -> list:
    hours, fracs = zip(*profile)
    return [float(np.interp(t % 24 + 1, hours, fracs)) * capacity for t in range(T)]


def generate_instance(n: int, T: int, F: int = 2, seed: int = 0,
                      config: GeneratorConfig = GeneratorConfig()) -> MucpInstance:
    """Random instance with groups of identical units.

    Each base unit draws a size in [0, 1]; bigger units get a larger Pmax,
    longer minimum run/rest times and a cheaper marginal cost.  Each base unit
    is copied d times, d uniform in 1..ceil(n/F), until n units exist.
    """
    if n < 1 or T < 2 or not 2 <= F <= 4:
        raise ValueError("need n >= 1, T >= 2 and 2 <= F <= 4")
    rng = np.random.default_rng(seed)
    cap = math.ceil(n / F)
    lo, hi = config.pmax_range
    wmax = max(1, min(config.max_window, T // 2))
    types = []
    left = n
    while left > 0:
        d = min(int(rng.integers(1, cap + 1)), left)
        left -= d
        size = float(rng.random())
        pmax = round(lo + (hi - lo) * size, 1)
        pmin = round(pmax * float(rng.uniform(*config.pmin_fraction)), 1)
        window = int(np.clip(1 + math.floor(size * wmax + rng.uniform(-0.5, 0.5)), 1, wmax))
        fixed = round(float(rng.uniform(*config.fixed_cost_per_100)) * pmax / 100.0, 2)
        start = round(fixed * float(rng.uniform(*config.startup_multiple)), 2)
        pc_lo, pc_hi = config.power_cost_range
        power = round(float(np.clip(pc_hi - (pc_hi - pc_lo) * size + rng.uniform(-3, 3), pc_lo, pc_hi)), 2)
        types.append(UnitType(d, pmin, pmax, window, window, fixed, start, power))
    capacity = sum(ut.pmax * ut.count for ut in types)
    demand = [round(d, 3) for d in demand_profile(T, capacity, config.profile)]
    return MucpInstance(T, tuple(types), tuple(demand))


def format_instance(inst: MucpInstance) -> str:
    lines = [f"MUCP {inst.n} {inst.T} {len(inst.types)}"]
    for ut in inst.types:
        lines.append("TYPE " + " ".join(repr(v) for v in (
            ut.count, float(ut.pmin), float(ut.pmax), ut.min_up, ut.min_down,
            float(ut.fixed_cost), float(ut.startup_cost), float(ut.power_cost))))
    lines.append("DEMAND " + " ".join(repr(float(d)) for d in inst.demand))
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> MucpInstance:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        head = lines[0]
        if head[0] != "MUCP" or len(head) != 4:
            raise ValueError("missing 'MUCP n T H' header")
        n, T, H = (int(v) for v in head[1:])
        types = []
        for parts in lines[1:1 + H]:
            if parts[0] != "TYPE" or len(parts) != 9:
                raise ValueError("bad TYPE line")
            vals = parts[1:]
            types.append(UnitType(int(vals[0]), float(vals[1]), float(vals[2]), int(vals[3]),
                                  int(vals[4]), float(vals[5]), float(vals[6]), float(vals[7])))
        dem = lines[1 + H]
        if dem[0] != "DEMAND":
            raise ValueError("missing DEMAND line")
        inst = MucpInstance(T, tuple(types), tuple(float(v) for v in dem[1:]))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed instance: {exc}") from exc
    if inst.n != n:
        raise ValueError(f"malformed instance: header says {n} units, types sum to {inst.n}")
    return inst


def format_solution(sol: MucpSolution) -> str:
    lines = [f"OBJ {sol.objective!r}", "X"]
    lines += [" ".join(str(v) for v in row) for row in sol.x]
    lines.append("U")
    lines += [" ".join(str(v) for v in row) for row in sol.u]
    lines.append("P")
    lines += [" ".join(repr(float(v)) for v in row) for row in sol.p]
    return "\n".join(lines) + "\n"


def parse_solution(text: str) -> MucpSolution:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        if lines[0][0] != "OBJ":
            raise ValueError("missing OBJ line")
        obj = float(lines[0][1])
        marks = {ln[0]: k for k, ln in enumerate(lines) if ln[0] in ("X", "U", "P")}
        if set(marks) != {"X", "U", "P"}:
            raise ValueError("need X, U and P blocks")
        x = [[int(v) for v in ln] for ln in lines[marks["X"] + 1:marks["U"]]]
        u = [[int(v) for v in ln] for ln in lines[marks["U"] + 1:marks["P"]]]
        p = [[float(v) for v in ln] for ln in lines[marks["P"] + 1:]]
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed solution: {exc}") from exc
    if not (len(x) == len(u) == len(p)):
        raise ValueError("malformed solution: blocks differ in length")
    return MucpSolution(x, u, p, obj)


def read_instance(path) -> MucpInstance:
    return parse_instance(Path(path).read_text())


def write_instance(inst: MucpInstance, path) -> None:
    Path(path).write_text(format_instance(inst))
