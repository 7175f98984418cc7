"""Exact rational simplex (two-phase, Bland's rule).

Small and dense by design: the problems solved here have a handful of rows
and at most a few thousand columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str
    x: tuple | None = None
    value: Fraction | None = None
    basis: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _pivot(rows, obj_rows, r, c):
    prow = rows[r]
    pv = prow[c]
    if pv != 1:
        inv = 1 / pv
        rows[r] = prow = [v * inv if v else v for v in prow]
    nz = [(j, v) for j, v in enumerate(prow) if v]
    for target in (rows, obj_rows):
        for i, row in enumerate(target):
            if target is rows and i == r:
                continue
            f = row[c]
            if f:
                for j, v in nz:
                    row[j] -= f * v


def _run(rows, obj, basis, allowed):
    """Minimize the objective row ``obj`` (reduced costs, last entry = -value)."""
    while True:
        entering = None
        for j in allowed:
            if obj[j] < 0:
                entering = j
                break
        if entering is None:
            return OPTIMAL
        best = None
        leave = None
        for i, row in enumerate(rows):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return UNBOUNDED
        _pivot(rows, [obj], leave, entering)
        basis[leave] = entering


def solve(c: Sequence, a_eq: Sequence[Sequence], b_eq: Sequence, maximize: bool = False) -> LPResult:
    """Optimize ``c . x`` subject to ``a_eq x = b_eq`` and ``x >= 0``.

    All data are converted to Fractions; the result is exact.
    """
    m = len(a_eq)
    ncols = len(c)
    sign = -1 if maximize else 1
    cost = [sign * Fraction(v) for v in c]
    rows = []
    for row, rhs in zip(a_eq, b_eq):
        if len(row) != ncols:
            raise LPError("constraint row length does not match objective")
        r = [Fraction(v) for v in row]
        rhs = Fraction(rhs)
        if rhs < 0:
            r = [-v for v in r]
            rhs = -rhs
        rows.append(r + [Fraction(0)] * m + [rhs])
    for i in range(m):
        rows[i][ncols + i] = Fraction(1)
    basis = [ncols + i for i in range(m)]

    # phase 1: minimize the sum of artificials
    phase1 = [Fraction(0)] * (ncols + m + 1)
    for row in rows:
        for j in range(ncols):
            phase1[j] -= row[j]
        phase1[-1] -= row[-1]
    status = _run(rows, phase1, basis, range(ncols))
    if status != OPTIMAL or phase1[-1] != 0:
        return LPResult(INFEASIBLE)

    # drive remaining artificials out of the basis, dropping redundant rows
    i = 0
    while i < len(rows):
        if basis[i] >= ncols:
            col = next((j for j in range(ncols) if rows[i][j] != 0), None)
            if col is None:
                del rows[i], basis[i]
                continue
            _pivot(rows, [], i, col)
            basis[i] = col
        i += 1
    rows = [r[:ncols] + [r[-1]] for r in rows]

    obj = cost + [Fraction(0)]
    for i, bcol in enumerate(basis):
        f = obj[bcol]
        if f:
            obj = [o - f * v for o, v in zip(obj, rows[i])]
    status = _run(rows, obj, basis, range(ncols))
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = [Fraction(0)] * ncols
    for i, bcol in enumerate(basis):
        x[bcol] = rows[i][-1]
    value = sum((Fraction(cv) * xv for cv, xv in zip(c, x) if xv), Fraction(0))
    return LPResult(OPTIMAL, tuple(x), value, tuple(basis))


def solve_mixture(columns: Sequence[Sequence], target: Sequence, objective: Sequence | None = None, maximize=False) -> LPResult:
    """Convex-combination LP: find q >= 0, sum q = 1, sum q_j columns[j] = target.

    ``columns`` is a list of column vectors. With ``objective`` the LP also
    optimizes ``objective . q``; otherwise it is a feasibility problem.
    """
    ncols = len(columns)
    dim = len(target)
    a_eq = [[col[i] for col in columns] for i in range(dim)]
    a_eq.append([1] * ncols)
    b_eq = list(target) + [1]
    c = objective if objective is not None else [0] * ncols
    return solve(c, a_eq, b_eq, maximize=maximize)
