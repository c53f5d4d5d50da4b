"""Small exact linear programming over ``fractions.Fraction``.

Dense two-phase tableau simplex with Bland's rule. Intended for the tiny
systems produced by Fourier-Motzkin elimination (tens of rows), where exact
arithmetic matters more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

__all__ = ["LPResult", "lp_maximize"]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class LPResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    value: Optional[Fraction] = None
    x: Optional[List[Fraction]] = None
    ray: Optional[List[Fraction]] = None  # improving direction when unbounded


def _pivot(T: List[List[Fraction]], obj: List[Fraction], row: int, col: int) -> None:
    prow = T[row]
    piv = prow[col]
    if piv != ONE:
        inv = ONE / piv
        prow[:] = [v * inv for v in prow]
    nz = [(j, v) for j, v in enumerate(prow) if v]
    for i, r in enumerate(T):
        if i == row:
            continue
        f = r[col]
        if f:
            for j, v in nz:
                r[j] -= f * v
    f = obj[col]
    if f:
        for j, v in nz:
            obj[j] -= f * v


def _run(T, obj, basis, allowed):
    """Maximise; ``obj`` holds reduced costs (last entry = -current value)."""
    ncol = len(obj) - 1
    while True:
        enter = next((j for j in range(ncol) if allowed[j] and obj[j] > 0), None)
        if enter is None:
            return None
        best = None
        for i, r in enumerate(T):
            a = r[enter]
            if a > 0:
                ratio = r[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return enter
        leave = best[1]
        _pivot(T, obj, leave, enter)
        basis[leave] = enter


def lp_maximize(c: Sequence, A: Sequence[Sequence], b: Sequence,
                free: Sequence[bool] = ()) -> LPResult:
    """Maximise ``c @ x`` subject to ``A @ x <= b``.

    Variables flagged in ``free`` are unrestricted in sign, all others are
    nonnegative. Inputs may be ints or Fractions.
    """
    n = len(c)
    m = len(A)
    free = list(free) + [False] * (n - len(free))
    # column layout: one column per nonneg var, two per free var, then slacks
    cols: List[tuple] = []
    for j in range(n):
        cols.append((j, 1))
        if free[j]:
            cols.append((j, -1))
    nx = len(cols)
    neg_rows = [i for i in range(m) if Fraction(b[i]) < 0]
    nart = len(neg_rows)
    ncol = nx + m + nart
    T: List[List[Fraction]] = []
    basis: List[int] = []
    art_of_row: Dict[int, int] = {}
    for i in range(m):
        row = [ZERO] * (ncol + 1)
        for k, (j, s) in enumerate(cols):
            a = Fraction(A[i][j])
            if a:
                row[k] = a * s
        row[nx + i] = ONE
        row[-1] = Fraction(b[i])
        if row[-1] < 0:
            row = [-v for v in row]
            a_col = nx + m + len(art_of_row)
            art_of_row[i] = a_col
            row[a_col] = ONE
            basis.append(a_col)
        else:
            basis.append(nx + i)
        T.append(row)

    allowed = [True] * ncol
    if nart:
        # phase 1: maximise -(sum of artificials)
        obj = [ZERO] * (ncol + 1)
        for i in neg_rows:
            for j, v in enumerate(T[i]):
                if j < nx + m or j == ncol:
                    obj[j] += v
        _run(T, obj, basis, allowed)
        if obj[-1] > 0:
            return LPResult("infeasible")
        art_cols = set(range(nx + m, ncol))
        for i in range(len(T) - 1, -1, -1):
            if basis[i] in art_cols:
                j = next((j for j in range(nx + m) if T[i][j]), None)
                if j is None:
                    del T[i]
                    del basis[i]
                else:
                    _pivot(T, [ZERO] * (ncol + 1), i, j)
                    basis[i] = j
        for j in art_cols:
            allowed[j] = False

    obj = [ZERO] * (ncol + 1)
    for k, (j, s) in enumerate(cols):
        obj[k] = Fraction(c[j]) * s
    for i, bj in enumerate(basis):
        f = obj[bj]
        if f:
            for j, v in enumerate(T[i]):
                if v:
                    obj[j] -= f * v
    enter = _run(T, obj, basis, allowed)

    def to_orig(vals):
        x = [ZERO] * n
        for k, (j, s) in enumerate(cols):
            x[j] += s * vals[k]
        return x

    z = [ZERO] * ncol
    for i, bj in enumerate(basis):
        z[bj] = T[i][-1]
    x = to_orig(z)
    if enter is not None:
        d = [ZERO] * ncol
        d[enter] = ONE
        for i, bj in enumerate(basis):
            d[bj] = -T[i][enter]
        return LPResult("unbounded", None, x, to_orig(d))
    value = sum((Fraction(c[j]) * x[j] for j in range(n)), ZERO)
    return LPResult("optimal", value, x)
