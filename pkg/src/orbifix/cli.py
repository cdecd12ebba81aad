"""Command line: generate instances, solve them, verify the kernel, compare
methods."""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .bnb import BRANCH_RULES, METHODS, SolveConfig, solve
from .mucp import (
    MucpSolution,
    build_model,
    format_solution,
    generate_instance,
    read_instance,
    validate_solution,
    write_instance,
)
from .oracle import sweep_faces

# name -> (units, periods, groups, instance count)
SUITES = {
    "tiny": (4, 6, 2, 5),
    "small": (6, 8, 2, 5),
    "medium": (10, 12, 2, 20),
}


@dataclass
class RunConfig:
    command: str
    method: str = "dof-s"
    input: Optional[Path] = None
    output: Optional[Path] = None
    seed: int = 0
    time_limit: float = 3600.0
    node_limit: int = 10**7
    tolerance: float = 1e-7
    branching: str = "fractional"
    extra: dict = field(default_factory=dict)

    def solve_config(self, method: Optional[str] = None) -> SolveConfig:
        return SolveConfig(method=method or self.method, rel_gap=self.tolerance,
                           time_limit=self.time_limit, node_limit=self.node_limit,
                           branching=self.branching, seed=self.seed)


def geometric_mean(values: Sequence[float]) -> float:
    if not values:
        return math.nan
    return math.exp(sum(math.log(v) for v in values) / len(values))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbifix", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log every node")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random unit-commitment instance")
    g.add_argument("--n", type=int, required=True, help="number of units")
    g.add_argument("--T", type=int, required=True, help="number of periods")
    g.add_argument("--F", type=int, default=2, help="average units per group")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)

    def limits(sp):
        sp.add_argument("--time-limit", type=float, default=3600.0)
        sp.add_argument("--node-limit", type=int, default=10**7)
        sp.add_argument("--tolerance", type=float, default=1e-7, help="relative gap")
        sp.add_argument("--branching", choices=BRANCH_RULES[:2], default="fractional")
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--method", choices=METHODS, default="dof-s")
    s.add_argument("--out", type=Path, help="solution file")
    limits(s)

    v = sub.add_parser("verify", help="kernel against brute force on every small face")
    v.add_argument("--max-cells", type=int, default=12)

    b = sub.add_parser("bench", help="compare methods on seeded instance batches")
    b.add_argument("--suite", choices=sorted(SUITES), default="tiny")
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--baseline", default="none")
    b.add_argument("--count", type=int, help="instances (default per suite)")
    limits(b)
    return p


def _config(ns) -> RunConfig:
    cfg = RunConfig(ns.command)
    for name in ("method", "input", "seed", "time_limit", "node_limit", "tolerance", "branching"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if hasattr(ns, "out"):
        cfg.output = ns.out
    return cfg


def cmd_generate(ns, out) -> int:
    inst = generate_instance(ns.n, ns.T, ns.F, ns.seed)
    write_instance(inst, ns.out)
    print(f"wrote {ns.out}: n={inst.n} T={inst.T} groups={[t.count for t in inst.types]}", file=out)
    return 0


def cmd_solve(cfg: RunConfig, out) -> int:
    inst = read_instance(cfg.input)
    res = solve(build_model(inst), cfg.solve_config())
    if res.x is not None:
        sol = MucpSolution.from_vector(inst, res.x)
        report = validate_solution(inst, sol)
        if not report.ok:
            print("solution failed validation:", *report.violations[:5], sep="\n  ", file=sys.stderr)
            return 1
        if cfg.output is not None:
            cfg.output.write_text(format_solution(sol))
    elif cfg.output is not None:
        print(f"no solution written ({res.stats.status})", file=sys.stderr)
    print(res.stats.as_block(), file=out)
    return 0


def cmd_verify(ns, out) -> int:
    def progress(m, n, faces, bad):
        print(f"{m}x{n}: {faces} faces, {bad} mismatches", file=out, flush=True)

    report = sweep_faces(ns.max_cells, on_shape=progress)
    if report.mismatches:
        print(f"FAIL: {report.mismatches} mismatches over {report.faces} faces", file=out)
        for m, n, digits in report.examples:
            print(f"  {m}x{n} face {''.join(map(str, digits))}", file=out)
        return 1
    print("OK: 0 mismatches over all faces", file=out)
    return 0


def cmd_bench(cfg: RunConfig, ns, out) -> int:
    methods = [m.strip() for m in ns.methods.split(",") if m.strip()]
    unknown = [m for m in methods + [ns.baseline] if m not in METHODS]
    if unknown:
        print(f"unknown method(s): {', '.join(unknown)}", file=sys.stderr)
        return 2
    if ns.baseline not in methods:
        methods.insert(0, ns.baseline)
    n, T, F, count = SUITES[ns.suite]
    count = ns.count or count
    header = f"{'seed':>4} " + " ".join(f"{m + ' nodes':>12} {m + ' s':>10}" for m in methods)
    print(header, file=out)
    runs = []
    for seed in range(cfg.seed, cfg.seed + count):
        model = build_model(generate_instance(n, T, F, seed))
        row = {}
        for m in methods:
            start = time.perf_counter()
            res = solve(model, cfg.solve_config(m))
            row[m] = (res.stats.nodes, time.perf_counter() - start, res.stats.status,
                      res.stats.incumbent)
        runs.append(row)
        cells = " ".join(f"{row[m][0]:>12} {row[m][1]:>10.3f}" for m in methods)
        print(f"{seed:>4} {cells}", file=out, flush=True)
    print(f"geometric-mean speed-up over {ns.baseline} ({len(runs)} instances):", file=out)
    for m in methods:
        if m == ns.baseline:
            continue
        time_ratio = geometric_mean([r[ns.baseline][1] / r[m][1] for r in runs])
        node_ratio = geometric_mean([r[ns.baseline][0] / max(1, r[m][0]) for r in runs])
        limited = sum(1 for r in runs if r[m][2] != "optimal" and r[m][2] != "infeasible")
        note = f"  ({limited} hit a limit)" if limited else ""
        print(f"  {m:>6}: time x{time_ratio:.2f}  nodes x{node_ratio:.2f}{note}", file=out)
    return 0


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    ns = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(message)s")
    cfg = _config(ns)
    try:
        if ns.command == "generate":
            return cmd_generate(ns, out)
        if ns.command == "solve":
            return cmd_solve(cfg, out)
        if ns.command == "verify":
            return cmd_verify(ns, out)
        return cmd_bench(cfg, ns, out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
