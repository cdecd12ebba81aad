"""LP relaxations.

``solve_lp`` runs a dense bounded-variable primal simplex with Bland's rule
(two phases, artificial start).  ``LpMatrix`` keeps one model alive so the
branch-and-bound can re-solve it with new bounds at every node: either with
the same simplex, or with a persistent HiGHS instance that warm-starts from
the previous basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import highspy
import numpy as np
from scipy import sparse
from scipy.optimize import linprog

FEAS_TOL = 1e-8
_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearRow:
    coeffs: dict
    sense: str  # "<=", ">=" or "="
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", ">=", "="):
            raise ValueError(f"bad relation {self.sense!r}")

    def activity(self, x) -> float:
        return sum(a * x[k] for k, a in self.coeffs.items())

    def violation(self, x) -> float:
        lhs = self.activity(x)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class LpProblem:
    """Minimise ``c @ x`` subject to ``rows`` and ``lower <= x <= upper``."""

    c: Sequence[float]
    rows: Sequence[LinearRow]
    lower: Sequence[float]
    upper: Sequence[float]

    @property
    def num_vars(self) -> int:
        return len(self.c)


@dataclass
class LpOutcome:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = math.nan
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _dense(rows: Sequence[LinearRow], n: int):
    m = len(rows)
    A = np.zeros((m, n))
    b = np.empty(m)
    for i, row in enumerate(rows):
        for k, a in row.coeffs.items():
            A[i, k] += a
        b[i] = row.rhs
    return A, b


class _BoundedSimplex:
    """Dense tableau over structural, slack and artificial columns."""

    def __init__(self, A, b, senses, c, lower, upper):
        m, n = A.shape
        self.m, self.n = m, n
        self.c_struct = np.asarray(c, dtype=float)
        lb = np.concatenate([lower, np.zeros(m), np.zeros(m)])
        ub = np.concatenate([upper, np.full(m, np.inf), np.full(m, np.inf)])
        slack_sign = np.array([1.0 if s == "<=" else -1.0 if s == ">=" else 0.0 for s in senses])
        # equality rows get a slack pinned at zero
        ub[n:n + m] = np.where(slack_sign == 0.0, 0.0, np.inf)
        slack_sign = np.where(slack_sign == 0.0, 1.0, slack_sign)

        x = np.where(np.isfinite(lb), lb, ub)
        if not np.all(np.isfinite(x[:n])):
            raise ValueError("every variable needs a finite bound")
        x[n:] = 0.0
        resid = b - A @ x[:n]
        art_sign = np.where(resid >= 0, 1.0, -1.0)

        full = np.hstack([A, np.diag(slack_sign), np.diag(art_sign)])
        self.T = full * art_sign[:, None]  # B^-1 [A S R] with B = diag(art_sign)
        self.lb, self.ub = lb, ub
        self.x = x
        self.basis = np.arange(n + 2 * m - m, n + 2 * m)
        self.x[self.basis] = np.abs(resid)
        self.is_basic = np.zeros(n + 2 * m, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0

    def _reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.T

    def _run(self, cost, max_iter):
        d = self._reduced_costs(cost)
        T, x, lb, ub = self.T, self.x, self.lb, self.ub
        movable = ub - lb > _PIVOT_TOL
        while True:
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration limit reached")
            at_upper = np.isfinite(ub) & (x >= ub - _PIVOT_TOL)
            eligible = (~self.is_basic) & movable & (
                ((~at_upper) & (d < -_COST_TOL)) | (at_upper & (d > _COST_TOL))
            )
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return OPTIMAL
            j = int(cand[0])  # Bland: smallest index enters
            direction = -1.0 if at_upper[j] else 1.0
            alpha = direction * T[:, j]
            xb = x[self.basis]
            lbb, ubb = lb[self.basis], ub[self.basis]
            ratios = np.full(self.m, np.inf)
            dec = alpha > _PIVOT_TOL
            inc = alpha < -_PIVOT_TOL
            ratios[dec] = (xb[dec] - lbb[dec]) / alpha[dec]
            inc_fin = inc & np.isfinite(ubb)
            ratios[inc_fin] = (ubb[inc_fin] - xb[inc_fin]) / (-alpha[inc_fin])
            ratios = np.maximum(ratios, 0.0)
            flip = ub[j] - lb[j]
            theta_row = ratios.min() if self.m else np.inf
            if not np.isfinite(flip) and not np.isfinite(theta_row):
                return UNBOUNDED
            self.iterations += 1
            if flip <= theta_row:
                x[j] = ub[j] if direction > 0 else lb[j]
                x[self.basis] = xb - flip * alpha
                continue
            ties = np.flatnonzero(ratios <= theta_row + 1e-12)
            r = int(ties[np.argmin(self.basis[ties])])  # Bland: smallest leaving index
            leaving = int(self.basis[r])
            x[self.basis] = xb - theta_row * alpha
            x[j] = x[j] + direction * theta_row
            x[leaving] = lb[leaving] if alpha[r] > 0 else ub[leaving]
            piv = T[r, j]
            T[r] /= piv
            col = T[:, j].copy()
            col[r] = 0.0
            T -= np.outer(col, T[r])
            d -= d[j] * T[r]
            self.basis[r] = j
            self.is_basic[leaving] = False
            self.is_basic[j] = True

    def solve(self, max_iter):
        n, m = self.n, self.m
        phase1 = np.zeros(n + 2 * m)
        phase1[n + m:] = 1.0
        self._run(phase1, max_iter)
        infeas = self.x[n + m:].sum()
        if infeas > FEAS_TOL * (1.0 + np.abs(self.x[:n]).max(initial=0.0)) * max(1, m):
            return INFEASIBLE
        self.ub[n + m:] = 0.0
        self.x[n + m:] = np.clip(self.x[n + m:], 0.0, 0.0)
        cost = np.zeros(n + 2 * m)
        cost[:n] = self.c_struct
        return self._run(cost, max_iter)


def solve_lp(p: LpProblem, method: str = "simplex", max_iter: Optional[int] = None) -> LpOutcome:
    """Optimal basic solution of ``p``.

    ``method="simplex"`` is the in-house bounded primal simplex with Bland's
    rule; ``method="highs"`` hands the same problem to scipy.
    """
    n = p.num_vars
    c = np.asarray(p.c, dtype=float)
    lower = np.asarray(p.lower, dtype=float)
    upper = np.asarray(p.upper, dtype=float)
    if np.any(lower > upper + FEAS_TOL):
        return LpOutcome(INFEASIBLE)
    if method == "highs":
        A, b = _dense(p.rows, n)
        return _highs(c, sparse.csr_matrix(A), b, [r.sense for r in p.rows], lower, upper)
    if method != "simplex":
        raise ValueError(f"unknown LP method {method!r}")
    if not p.rows:
        x = np.where(c >= 0, lower, upper)
        if not np.all(np.isfinite(x)):
            return LpOutcome(UNBOUNDED)
        return LpOutcome(OPTIMAL, x, float(c @ x))
    A, b = _dense(p.rows, n)
    solver = _BoundedSimplex(A, b, [r.sense for r in p.rows], c, lower, upper)
    limit = max_iter if max_iter is not None else 200 * (A.shape[0] + n + 10)
    status = solver.solve(limit)
    if status != OPTIMAL:
        return LpOutcome(status, iterations=solver.iterations)
    x = np.clip(solver.x[:n], lower, upper)
    return LpOutcome(OPTIMAL, x, float(c @ x), solver.iterations)


def _highs(c, A, b, senses, lower, upper) -> LpOutcome:
    senses = np.asarray(senses)
    le, ge, eq = senses == "<=", senses == ">=", senses == "="
    A_ub = sparse.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([b[le], -b[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=np.column_stack([lower, upper]), method="highs")
    if res.status == 2:
        return LpOutcome(INFEASIBLE)
    if res.status == 3:
        return LpOutcome(UNBOUNDED)
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    x = np.clip(res.x, lower, upper)
    return LpOutcome(OPTIMAL, x, float(c @ x), int(getattr(res, "nit", 0)))


@dataclass
class LpMatrix:
    """Constraint rows of a model, compiled once for repeated node solves."""

    c: np.ndarray
    rows: Sequence[LinearRow]
    method: str = "highs"  # or "simplex", or "linprog" (stateless scipy call)
    _A_ub: object = field(init=False, repr=False)
    _b_ub: np.ndarray = field(init=False, repr=False)
    _A_eq: object = field(init=False, repr=False)
    _b_eq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self._A_ub, self._b_ub, self._A_eq, self._b_eq = self._split(self.rows)
        self._session = HighsSession(self.c, self.rows, len(self.c)) if self.method == "highs" else None

    def _split(self, rows):
        n = len(self.c)
        ub_r, ub_c, ub_v, b_ub = [], [], [], []
        eq_r, eq_c, eq_v, b_eq = [], [], [], []
        for row in rows:
            if row.sense == "=":
                i = len(b_eq)
                for k, a in row.coeffs.items():
                    eq_r.append(i); eq_c.append(k); eq_v.append(a)
                b_eq.append(row.rhs)
            else:
                sign = 1.0 if row.sense == "<=" else -1.0
                i = len(b_ub)
                for k, a in row.coeffs.items():
                    ub_r.append(i); ub_c.append(k); ub_v.append(sign * a)
                b_ub.append(sign * row.rhs)
        A_ub = sparse.csr_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), n))
        A_eq = sparse.csr_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), n))
        return A_ub, np.array(b_ub, dtype=float), A_eq, np.array(b_eq, dtype=float)

    def solve(self, lower, upper, extra_rows: Sequence[LinearRow] = ()) -> LpOutcome:
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if np.any(lower > upper + FEAS_TOL):
            return LpOutcome(INFEASIBLE)
        if self.method == "simplex":
            return solve_lp(LpProblem(self.c, list(self.rows) + list(extra_rows), lower, upper))
        if self.method == "highs":
            return self._session.solve(lower, upper, extra_rows)
        A_ub, b_ub, A_eq, b_eq = self._A_ub, self._b_ub, self._A_eq, self._b_eq
        if extra_rows:
            xa, xb, xe, xbe = self._split(extra_rows)
            A_ub = sparse.vstack([A_ub, xa]).tocsr()
            b_ub = np.concatenate([b_ub, xb])
            A_eq = sparse.vstack([A_eq, xe]).tocsr()
            b_eq = np.concatenate([b_eq, xbe])
        if A_ub.shape[0] == 0 and A_eq.shape[0] == 0:
            x = np.where(self.c >= 0, lower, upper)
            return LpOutcome(OPTIMAL, x, float(self.c @ x))
        res = linprog(
            self.c,
            A_ub=A_ub if A_ub.shape[0] else None,
            b_ub=b_ub if A_ub.shape[0] else None,
            A_eq=A_eq if A_eq.shape[0] else None,
            b_eq=b_eq if A_eq.shape[0] else None,
            bounds=np.column_stack([lower, upper]),
            method="highs",
        )
        if res.status == 2:
            return LpOutcome(INFEASIBLE)
        if res.status == 3:
            return LpOutcome(UNBOUNDED)
        if res.status != 0:
            raise RuntimeError(f"HiGHS failed: {res.message}")
        x = np.clip(res.x, lower, upper)
        return LpOutcome(OPTIMAL, x, float(self.c @ x), int(getattr(res, "nit", 0)))


class HighsSession:
    """A HiGHS model kept across solves; only column bounds and temporary
    rows change between calls, so each solve starts from the last basis."""

    def __init__(self, c, rows: Sequence[LinearRow], num_vars: int):
        self.n = num_vars
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        lp = highspy.HighsLp()
        lp.num_col_ = num_vars
        lp.num_row_ = len(rows)
        lp.col_cost_ = np.asarray(c, dtype=float)
        lp.col_lower_ = np.zeros(num_vars)
        lp.col_upper_ = np.ones(num_vars)
        lo, hi = self._row_bounds(rows)
        lp.row_lower_ = lo
        lp.row_upper_ = hi
        r, k, v = [], [], []
        for i, row in enumerate(rows):
            for var, a in row.coeffs.items():
                r.append(i); k.append(var); v.append(a)
        A = sparse.csc_matrix((v, (r, k)), shape=(len(rows), num_vars))
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        self.h.passModel(lp)
        self.base_rows = len(rows)
        self.cols = np.arange(num_vars, dtype=np.int32)
        self.c = np.asarray(c, dtype=float)

    @staticmethod
    def _row_bounds(rows):
        inf = highspy.kHighsInf
        lo = np.array([r.rhs if r.sense in (">=", "=") else -inf for r in rows], dtype=float)
        hi = np.array([r.rhs if r.sense in ("<=", "=") else inf for r in rows], dtype=float)
        return lo, hi

    def solve(self, lower, upper, extra_rows: Sequence[LinearRow] = ()) -> LpOutcome:
        h = self.h
        h.changeColsBounds(self.n, self.cols, np.asarray(lower, dtype=float),
                           np.asarray(upper, dtype=float))
        if extra_rows:
            lo, hi = self._row_bounds(extra_rows)
            for row, a, b in zip(extra_rows, lo, hi):
                idx = np.fromiter(row.coeffs.keys(), dtype=np.int32)
                val = np.fromiter(row.coeffs.values(), dtype=float)
                h.addRow(a, b, len(idx), idx, val)
        try:
            h.run()
            status = h.getModelStatus()
            if status == highspy.HighsModelStatus.kOptimal:
                x = np.clip(np.array(h.getSolution().col_value), lower, upper)
                return LpOutcome(OPTIMAL, x, float(self.c @ x),
                                 int(h.getInfo().simplex_iteration_count))
            if status == highspy.HighsModelStatus.kInfeasible:
                return LpOutcome(INFEASIBLE)
            if status in (highspy.HighsModelStatus.kUnbounded,
                          highspy.HighsModelStatus.kUnboundedOrInfeasible):
                return LpOutcome(UNBOUNDED)
            raise RuntimeError(f"HiGHS stopped with {h.modelStatusToString(status)}")
        finally:
            if extra_rows:
                k = len(extra_rows)
                h.deleteRows(k, np.arange(self.base_rows, self.base_rows + k, dtype=np.int32))
