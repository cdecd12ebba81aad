"""Acceptance suite: one PASS/FAIL line per criterion on the terminal."""

import gc
import math
import statistics
import time

import numpy as np
import pytest

from orbifix.bnb import METHODS, solve
from orbifix.kernel import (
    MatrixView,
    PartialMatrix,
    build_max_sequence,
    build_min_sequence,
    compute_fixing,
    compute_fixing_matrix,
    first_fixed_row,
    last_discriminating_row,
)
from orbifix.mucp import build_model, generate_instance
from orbifix.oracle import (
    brute_force_mucp,
    count_orbits,
    enumerate_sub_orbitope,
    sweep_faces,
    unit_patterns,
)
from orbifix.problem import BinaryProgram, NodeState
from orbifix.subsym import apply_scope_fixing, detect_program_scopes

from conftest import WORKED_ONES, WORKED_ZEROS


@pytest.fixture
def report(capsys):
    def emit(number, ok, text):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}", flush=True)
    return emit


def geometric_mean(values):
    return math.exp(sum(math.log(v) for v in values) / len(values))


# 1 -------------------------------------------------------------------------

def test_worked_example(report):
    view = MatrixView.full(5, 3)
    M = PartialMatrix.from_sets(5, 3, WORKED_ZEROS, WORKED_ONES)
    checks = {
        "i_f": ([first_fixed_row(M, view, j) for j in range(2)], [3, 5]),
        "i_d": ([last_discriminating_row(M, view, j, i) for j, i in ((0, 3), (1, 5))], [2, 3]),
        "min": (build_min_sequence(WORKED_ZEROS, WORKED_ONES, view),
                ((1, 1, 1), (1, 1, 1), (1, 0, 0), (0, 1, 0), (1, 0, 0))),
        "max": (build_max_sequence(WORKED_ZEROS, WORKED_ONES, view),
                ((1, 1, 1), (1, 1, 1), (1, 0, 0), (0, 1, 1), (1, 0, 0))),
    }
    res = compute_fixing(WORKED_ZEROS, WORKED_ONES, view)
    checks["first_diff"] = (res.first_diff, (5, 5, 3))
    checks["fix0"] = (set(res.fix0), {(2, 2)})
    checks["fix1"] = (set(res.fix1), {(0, 0), (2, 0), (0, 1), (1, 1)})
    wrong = [k for k, (got, want) in checks.items() if got != want]
    times = []
    for _ in range(200):
        start = time.perf_counter()
        compute_fixing_matrix(M, view)
        times.append(time.perf_counter() - start)
    elapsed = statistics.median(times)
    ok = not wrong and elapsed < 1e-3
    report(1, ok, f"worked face reproduced exactly ({len(checks) - len(wrong)}/{len(checks)} "
                  f"quantities), median kernel time {elapsed * 1e3:.3f} ms")
    assert not wrong, wrong
    assert elapsed < 1e-3


# 2 -------------------------------------------------------------------------

def test_exhaustive_oracle_equivalence(report):
    start = time.perf_counter()
    sweep = sweep_faces(12)
    elapsed = time.perf_counter() - start
    ok = sweep.mismatches == 0 and elapsed < 600
    report(2, ok, f"{sweep.faces} faces over {len(sweep.shapes)} shapes (m*n <= 12), "
                  f"{sweep.mismatches} mismatches, {elapsed:.0f} s")
    assert sweep.mismatches == 0, sweep.examples
    assert elapsed < 600


# 3 -------------------------------------------------------------------------

def test_exactly_one_representative(report):
    wrong = []
    runs = 0
    for m in range(1, 4):
        for n in range(1, 4):
            want = math.comb(2 ** m + n - 1, n)
            assert want == count_orbits(m, n)
            configs = [dict(method="sof")] + [dict(method="dof", branching="random", seed=s)
                                              for s in range(10)]
            for cfg in configs:
                res = solve(BinaryProgram.pure_grid(m, n), enumerate_all=True, **cfg)
                runs += 1
                distinct = len(set(res.solutions))
                if len(res.solutions) != want or distinct != want:
                    wrong.append((m, n, cfg, len(res.solutions)))
    report(3, not wrong, f"{runs} enumerations (SOF + DOF x 10 seeds, m, n <= 3), "
                         f"{len(wrong)} with a count other than C(2^m+n-1, n)")
    assert not wrong, wrong


# 4 -------------------------------------------------------------------------

SHAPES_4 = [(3, 6), (4, 6), (4, 5), (5, 4), (6, 4)]


def test_optimality_preservation(report):
    start = time.perf_counter()
    worst = 0.0
    bad = []
    for seed in range(20):
        n, T = SHAPES_4[seed % len(SHAPES_4)]
        inst = generate_instance(n, T, 2, seed)
        best = brute_force_mucp(inst)
        model = build_model(inst)
        for method in METHODS:
            res = solve(model, method=method)
            if not best.feasible:
                if res.stats.status != "infeasible":
                    bad.append((seed, method, res.stats.status))
                continue
            gap = abs(res.stats.incumbent - best.objective) / abs(best.objective)
            worst = max(worst, gap)
            if not gap <= 1e-7:
                bad.append((seed, method, res.stats.incumbent, best.objective))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 300
    report(4, ok, f"20 instances x {len(METHODS)} methods vs brute force, worst relative gap "
                  f"{worst:.2e}, {len(bad)} disagreements, {elapsed:.0f} s")
    assert not bad, bad
    assert elapsed < 300


# 5 -------------------------------------------------------------------------

def test_fixing_effectiveness(report):
    """Plain search is capped at three times the DOF node count: a capped run
    still proves nodes(none) >= cap >= nodes(dof) for that instance."""
    rows = []
    for seed in range(20):
        model = build_model(generate_instance(10, 12, 2, seed))
        dof = solve(model, method="dof").stats
        dofs = solve(model, method="dof-s").stats
        cap = 3 * dof.nodes
        plain = solve(model, method="none", node_limit=cap).stats
        rows.append((dof, dofs, plain))
    nodes_dof = sum(r[0].nodes for r in rows)
    nodes_dofs = sum(r[1].nodes for r in rows)
    nodes_none = sum(r[2].nodes for r in rows)
    fix_dof = sum(r[0].fixings for r in rows)
    fix_dofs = sum(r[1].fixings for r in rows)
    capped = sum(1 for r in rows if r[2].status == "node_limit")
    unsolved = [i for i, r in enumerate(rows) if r[0].status != "optimal" or r[1].status != "optimal"]
    ratio_none = geometric_mean([r[2].nodes / r[0].nodes for r in rows])
    ratio_s = geometric_mean([r[0].nodes / r[1].nodes for r in rows])
    ok = (nodes_dofs <= nodes_dof <= nodes_none and fix_dofs >= fix_dof > 0 and not unsolved)
    report(5, ok, f"nodes dof-s={nodes_dofs} dof={nodes_dof} none>={nodes_none} "
                  f"({capped} capped); fixings dof-s={fix_dofs} dof={fix_dof}; "
                  f"per node dof-s={fix_dofs / nodes_dofs:.3f} dof={fix_dof / nodes_dof:.3f}; "
                  f"geo-mean node ratio none/dof>={ratio_none:.2f}, dof/dof-s={ratio_s:.3f}")
    assert not unsolved
    assert nodes_dofs <= nodes_dof <= nodes_none
    assert fix_dofs >= fix_dof > 0


# 6 -------------------------------------------------------------------------

SHAPES_6 = [(32, 32 << k) for k in range(8)]


def random_feasible_face(rng, m, n, density=0.5):
    X = rng.integers(0, 2, size=(m, n))
    order = sorted(range(n), key=lambda c: tuple(X[:, c]), reverse=True)
    X = X[:, order]
    mask = rng.random((m, n)) < density
    return PartialMatrix(m, n, bytes(np.where(mask, X, 2).astype(np.uint8).ravel()))


def test_kernel_linear_time(report):
    """Shapes are timed round-robin, so slow drift of the machine's speed
    lands on every size alike instead of on whichever size ran last.  Each
    step doubles the column count, which doubles per-column work too."""
    rng = np.random.default_rng(2024)
    faces = [[random_feasible_face(rng, m, n) for _ in range(11)] for m, n in SHAPES_6]
    views = [MatrixView.full(m, n) for m, n in SHAPES_6]
    assert all(compute_fixing_matrix(M, v).feasible for fs, v in zip(faces, views) for M in fs)
    # fastest of the rounds per face: interference only ever adds time
    best = [[math.inf] * len(fs) for fs in faces]
    enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(7):
            for k, view in enumerate(views):
                for f, M in enumerate(faces[k]):
                    start = time.process_time()
                    compute_fixing_matrix(M, view)
                    best[k][f] = min(best[k][f], time.process_time() - start)
    finally:
        if enabled:
            gc.enable()
    medians = [statistics.median(b) for b in best]
    ratios = [b / a for a, b in zip(medians, medians[1:])]
    ok = all(1.5 <= r <= 3.0 for r in ratios)
    first, last = (a * b for a, b in (SHAPES_6[0], SHAPES_6[-1]))
    report(6, ok, f"median time ratio per doubling, {first}..{last} cells: "
                  + ", ".join(f"{r:.2f}" for r in ratios))
    assert ok, ratios


# 7 -------------------------------------------------------------------------

def random_node(rng, inst, model):
    """Fixings on commitment cells: revealed from a random feasible schedule
    or drawn uniformly, optionally with a random dynamic row order."""
    fixed = {}
    density = rng.uniform(0.15, 0.5)
    from_schedule = rng.random() < 0.6
    offset = 0
    for ut in inst.types:
        patterns = unit_patterns(inst.T, ut.min_up, ut.min_down)
        for c in range(ut.count):
            bits = patterns[int(rng.integers(len(patterns)))]
            for t in range(inst.T):
                if rng.random() < density:
                    value = bits[t] if from_schedule else int(rng.integers(2))
                    fixed[inst.x_var(t, offset + c)] = value
        offset += ut.count
    dynamic = rng.random() < 0.5
    order = ()
    if dynamic:
        order = tuple(int(r) for r in rng.permutation(inst.T)[: int(rng.integers(1, inst.T + 1))])
    return NodeState(fixed, order), dynamic


def test_sub_orbitope_soundness(report):
    rng = np.random.default_rng(7)
    violations = 0
    checked_cells = 0
    nodes_with_fixing = 0
    pruned = 0
    for k in range(50):
        n = int(rng.integers(2, 5))
        T = int(rng.integers(3, 7))
        inst = generate_instance(n, T, 2, 1000 + k)
        model = build_model(inst)
        node, dynamic = random_node(rng, inst, model)
        given = dict(node.fixed)
        redetect = lambda f: detect_program_scopes(model.blocks, f)
        res = apply_scope_fixing(node, redetect(node.fixed), model.blocks, dynamic, redetect)
        completions = []
        for block, ut in zip(model.blocks, inst.types):
            zeros = {(t, c) for t in range(T) for c in range(ut.count) if given.get(block.grid[t][c]) == 0}
            ones = {(t, c) for t in range(T) for c in range(ut.count) if given.get(block.grid[t][c]) == 1}
            completions.append(enumerate_sub_orbitope(zeros, ones, T, ut.count, ut.min_up,
                                                      ut.min_down, node.row_order if dynamic else None))
        if not res.feasible:
            pruned += 1
            if all(completions):
                violations += 1
            continue
        if res.count:
            nodes_with_fixing += 1
        for var in res.fix0 | res.fix1:
            b, t, c = model.cell_of[var]
            checked_cells += 1
            if any(X[t][c] != node.fixed[var] for X in completions[b]):
                violations += 1
    report(7, violations == 0,
           f"50 random nodes ({nodes_with_fixing} with fixings, {pruned} pruned), "
           f"{checked_cells} fixed cells checked against enumeration, {violations} violations")
    assert violations == 0
