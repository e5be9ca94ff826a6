"""Dense two-phase simplex over ``Fraction`` with Bland's anti-cycling rule.

Small problems only (tens of rows and columns); every answer is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

_ZERO = Fraction(0)


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[tuple] = None
    value: Optional[Fraction] = None


def _pivot(T, basis, row, col):
    piv = T[row][col]
    T[row] = [v / piv for v in T[row]]
    pr = T[row]
    for i, r in enumerate(T):
        if i != row and r[col] != 0:
            f = r[col]
            T[i] = [a - f * b for a, b in zip(r, pr)]
    basis[row] = col


def _run(T, basis, cost, allowed):
    ncols = len(cost)
    while True:
        entering = None
        for j in range(ncols):
            if not allowed[j] or j in basis:
                continue
            rc = cost[j]
            for i, b in enumerate(basis):
                if cost[b] and T[i][j]:
                    rc -= cost[b] * T[i][j]
            if rc > 0:
                entering = j
                break
        if entering is None:
            return "optimal"
        best = None
        for i, r in enumerate(T):
            a = r[entering]
            if a > 0:
                ratio = r[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], entering)


def maximize(c: Sequence, A_ub=(), b_ub=(), A_eq=(), b_eq=(), free: Sequence[int] = ()) -> LPResult:
    """Maximize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``.

    Variables are nonnegative except those listed in ``free``.  All inputs are
    converted to ``Fraction``.
    """
    n = len(c)
    free = sorted(set(free))
    # column map: original j -> (pos col, neg col or None)
    cols = {}
    k = 0
    for j in range(n):
        cols[j] = (k, k + 1 if j in free else None)
        k += 2 if j in free else 1
    nx = k
    rows, rhs, n_slack = [], [], len(A_ub)

    def expand(a):
        out = [_ZERO] * nx
        for j, v in enumerate(a):
            v = Fraction(v)
            p, q = cols[j]
            out[p] = v
            if q is not None:
                out[q] = -v
        return out

    for i, (a, b) in enumerate(zip(A_ub, b_ub)):
        r = expand(a) + [_ZERO] * n_slack
        r[nx + i] = Fraction(1)
        rows.append(r)
        rhs.append(Fraction(b))
    for a, b in zip(A_eq, b_eq):
        rows.append(expand(a) + [_ZERO] * n_slack)
        rhs.append(Fraction(b))
    m = len(rows)
    nstruct = nx + n_slack
    T = []
    for i in range(m):
        r, b = rows[i], rhs[i]
        if b < 0:
            r = [-v for v in r]
            b = -b
        art = [_ZERO] * m
        art[i] = Fraction(1)
        T.append(r + art + [b])
    ncols = nstruct + m
    basis = list(range(nstruct, ncols))

    cost1 = [_ZERO] * nstruct + [Fraction(-1)] * m
    _run(T, basis, cost1, [True] * ncols)
    if sum(T[i][-1] for i, b in enumerate(basis) if b >= nstruct) > 0:
        return LPResult("infeasible")
    # drive zero-level artificials out of the basis
    i = 0
    while i < len(T):
        if basis[i] >= nstruct:
            j = next((j for j in range(nstruct) if T[i][j] != 0), None)
            if j is None:
                del T[i]
                del basis[i]
                continue
            _pivot(T, basis, i, j)
        i += 1

    cost2 = [_ZERO] * ncols
    for j in range(n):
        p, q = cols[j]
        cost2[p] = Fraction(c[j])
        if q is not None:
            cost2[q] = -Fraction(c[j])
    allowed = [j < nstruct for j in range(ncols)]
    status = _run(T, basis, cost2, allowed)
    if status == "unbounded":
        return LPResult("unbounded")
    vals = [_ZERO] * ncols
    for i, b in enumerate(basis):
        vals[b] = T[i][-1]
    x = []
    for j in range(n):
        p, q = cols[j]
        x.append(vals[p] - (vals[q] if q is not None else 0))
    value = sum((Fraction(cj) * xj for cj, xj in zip(c, x)), _ZERO)
    return LPResult("optimal", tuple(x), value)


def feasible_point(A_eq, b_eq, A_ub=(), b_ub=(), n: Optional[int] = None) -> Optional[tuple]:
    """Any nonnegative solution of the constraints, or ``None``."""
    if n is None:
        n = len(A_eq[0]) if A_eq else len(A_ub[0])
    res = maximize([0] * n, A_ub, b_ub, A_eq, b_eq)
    return res.x if res.status == "optimal" else None


def as_fractions(values) -> List[Fraction]:
    return [Fraction(v) for v in values]
