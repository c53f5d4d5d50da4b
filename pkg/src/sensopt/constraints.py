"""Exact rational linear constraint systems for the scheduling model.

Builds the per-source rate split system (variables ``R_i_j``: rate of source
``i`` sent in slot ``j``), projects it with Fourier-Motzkin elimination and
builds the closed-form reduced system over source rates ``r_i`` and slot
capacities ``c_i``. Everything here is exact ``Fraction`` arithmetic.

The buffer size may be a number, ``math.inf`` (no buffer rows) or a symbol
name such as ``"B"``, in which case it is carried as a nonnegative parameter
variable that is never eliminated.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import reduce
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .ratlp import lp_maximize

__all__ = [
    "LinIneq",
    "ConstraintSystem",
    "build_raw_system",
    "build_reduced_system",
    "fm_eliminate",
    "eliminate_all",
    "project_raw_system",
    "prune_syntactic",
    "prune_lp",
    "systems_equivalent",
    "format_system",
    "parse_system",
    "to_dense",
]

BufferSpec = Union[int, float, Fraction, str]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # decimal literal, not the binary expansion
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class LinIneq:
    """``sum(coeff * var) <= bound`` with exact rational data.

    ``coeffs`` is a tuple of ``(name, Fraction)`` pairs sorted by name with no
    zero entries. ``history`` records which original rows were combined to
    produce this one (used for Chernikov's redundancy rule).
    """

    coeffs: Tuple[Tuple[str, Fraction], ...]
    bound: Fraction
    label: str = field(default="", compare=False)
    history: frozenset = field(default=frozenset(), compare=False)

    @classmethod
    def make(cls, coeffs: Mapping[str, object], bound=0, label: str = "",
             history: Iterable = ()) -> "LinIneq":
        items = []
        for k, v in coeffs.items():
            v = _frac(v)
            if v:
                items.append((k, v))
        return cls(tuple(sorted(items)), _frac(bound), label, frozenset(history))

    def coeff(self, var: str) -> Fraction:
        for k, v in self.coeffs:
            if k == var:
                return v
        return Fraction(0)

    def as_dict(self) -> Dict[str, Fraction]:
        return dict(self.coeffs)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(k for k, _ in self.coeffs)

    def canonical(self) -> "LinIneq":
        """Scale by a positive factor so the coefficients are coprime integers."""
        if not self.coeffs:
            return self
        den = reduce(math.lcm, (v.denominator for _, v in self.coeffs), 1)
        num = reduce(math.gcd, (abs(v.numerator * (den // v.denominator))
                                for _, v in self.coeffs), 0)
        s = Fraction(den, num)
        if s == 1:
            return self
        return LinIneq(tuple((k, v * s) for k, v in self.coeffs), self.bound * s,
                       self.label, self.history)

    def holds(self, point: Mapping[str, Fraction]) -> bool:
        return sum((v * point[k] for k, v in self.coeffs), Fraction(0)) <= self.bound

    def slack(self, point: Mapping[str, float]) -> float:
        return float(self.bound) - sum(float(v) * point[k] for k, v in self.coeffs)


@dataclass(frozen=True)
class ConstraintSystem:
    """A polyhedron ``{x : every row holds, x_v >= 0 for v in nonneg}``."""

    variables: Tuple[str, ...]
    inequalities: Tuple[LinIneq, ...]
    nonneg: frozenset = frozenset()
    eliminated: int = 0

    def __post_init__(self):
        declared = set(self.variables)
        for row in self.inequalities:
            missing = set(row.variables) - declared
            if missing:
                raise ValueError(f"row {row.label or row} uses undeclared {sorted(missing)}")
        if not set(self.nonneg) <= declared:
            raise ValueError("nonneg set references undeclared variables")

    def __len__(self):
        return len(self.inequalities)

    def contains(self, point: Mapping[str, object]) -> bool:
        pt = {k: _frac(v) for k, v in point.items()}
        if any(pt[v] < 0 for v in self.nonneg):
            return False
        return all(row.holds(pt) for row in self.inequalities)

    def row_keys(self) -> set:
        """Canonical rows as hashable keys (labels and histories ignored)."""
        return {(r.canonical().coeffs, r.canonical().bound) for r in self.inequalities}

    def with_rows(self, rows: Sequence[LinIneq]) -> "ConstraintSystem":
        return replace(self, inequalities=tuple(rows))


def _parse_buffer(b_max: BufferSpec):
    """Return ``(kind, value)`` with kind in {"inf", "num", "sym"}."""
    if isinstance(b_max, str):
        s = b_max.strip()
        if s.lower() in ("inf", "infinity", "+inf"):
            return "inf", None
        if re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", s):
            return "sym", s
        v = Fraction(s)
    elif isinstance(b_max, float) and math.isinf(b_max):
        if b_max < 0:
            raise ValueError("buffer size must be positive")
        return "inf", None
    else:
        v = _frac(b_max)
    if v <= 0:
        raise ValueError("buffer size must be positive")
    return "num", v


def _buffer_terms(kind, value):
    """Coefficient dict contribution and bound for a ``... <= B`` row."""
    if kind == "sym":
        return {value: Fraction(-1)}, Fraction(0)
    return {}, value


def _check_nd(n: int, d: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"number of slots must be a positive integer, got {n}")
    if not isinstance(d, int) or not 1 <= d <= n:
        raise ValueError(f"delay must be in [1, {n}], got {d}")


def rate_var(i: int) -> str:
    return f"r_{i}"


def cap_var(i: int) -> str:
    return f"c_{i}"


def split_var(i: int, j: int) -> str:
    return f"R_{i}_{j}"


def build_raw_system(n: int, d: int, b_max: BufferSpec) -> ConstraintSystem:
    """Per-source rate split constraints for ``n`` slots and deadline ``d``."""
    _check_nd(n, d)
    kind, bval = _parse_buffer(b_max)
    R = [split_var(i, j) for i in range(1, n + 1) for j in range(i, min(i + d - 1, n) + 1)]
    variables = R + [rate_var(i) for i in range(1, n + 1)] + [cap_var(i) for i in range(1, n + 1)]
    if kind == "sym":
        variables.append(bval)
    rows = []
    for j in range(1, n + 1):
        co = {split_var(i, j): 1 for i in range(max(1, j - d + 1), j + 1)}
        co[cap_var(j)] = -1
        rows.append(LinIneq.make(co, 0, f"capacity[{j}]"))
    for i in range(1, n + 1):
        co = {split_var(i, j): -1 for j in range(i, min(i + d - 1, n) + 1)}
        co[rate_var(i)] = 1
        rows.append(LinIneq.make(co, 0, f"rate[{i}]"))
    if kind != "inf":
        extra, bound = _buffer_terms(kind, bval)
        for k in range(1, n + 1):
            co = {split_var(i, j): 1
                  for j in range(k, min(k + d - 1, n) + 1)
                  for i in range(max(1, j - d + 1), k + 1)}
            co.update(extra)
            rows.append(LinIneq.make(co, bound, f"buffer[{k}]"))
    return ConstraintSystem(tuple(variables), tuple(rows), frozenset(variables))


def build_reduced_system(n: int, d: int, b_max: BufferSpec) -> ConstraintSystem:
    """Causality, delay and buffer constraints over ``r_i`` and ``c_i``."""
    _check_nd(n, d)
    kind, bval = _parse_buffer(b_max)
    r = [rate_var(i) for i in range(1, n + 1)]
    c = [cap_var(i) for i in range(1, n + 1)]
    variables = r + c + ([bval] if kind == "sym" else [])
    rows = []

    def window(r_lo, r_hi, c_lo, c_hi):
        co = {rate_var(j): 1 for j in range(r_lo, r_hi + 1)}
        for j in range(c_lo, c_hi + 1):
            co[cap_var(j)] = co.get(cap_var(j), 0) - 1
        return co

    for i in range(1, n + 1):
        rows.append(LinIneq.make(window(i, n, i, n), 0, f"causality[{i}]"))
    for k in range(1, n - d + 1):
        for i in range(k, n - d + 1):
            rows.append(LinIneq.make(window(k, i, k, i + d - 1), 0, f"delay[{k},{i}]"))
    if kind != "inf":
        extra, bound = _buffer_terms(kind, bval)
        for k in range(1, n):
            for i in range(k, n):
                co = window(k, i + 1, k, i)
                co.update(extra)
                rows.append(LinIneq.make(co, bound, f"buffer[{k},{i}]"))
        for i in range(1, n + 1):
            co = {rate_var(i): 1}
            co.update(extra)
            rows.append(LinIneq.make(co, bound, f"rate_cap[{i}]"))
    return ConstraintSystem(tuple(variables), tuple(rows), frozenset(variables))


# -- redundancy removal -------------------------------------------------------

def _history_key(row: LinIneq):
    return (len(row.history), sorted(map(str, row.history)), row.label)


def prune_syntactic(sys: ConstraintSystem, chernikov: bool = True) -> ConstraintSystem:
    """Drop trivially redundant rows.

    Removes empty rows with a nonnegative bound, rows implied by
    nonnegativity alone, duplicates (after positive scaling), rows dominated
    coefficient-wise by another row with a tighter bound and, when histories
    are tracked, rows that combine more than ``eliminated + 1`` originals.
    """
    nonneg = sys.nonneg
    kept: Dict[tuple, LinIneq] = {}
    infeasible = None
    for row in sys.inequalities:
        row = row.canonical()
        if not row.coeffs:
            if row.bound < 0:
                infeasible = row
            continue
        if row.bound >= 0 and all(k in nonneg and v < 0 for k, v in row.coeffs):
            continue
        if chernikov and row.history and len(row.history) > sys.eliminated + 1:
            continue
        key = (row.coeffs, row.bound)
        if key not in kept or _history_key(row) < _history_key(kept[key]):
            kept[key] = row
    if infeasible is not None:
        return sys.with_rows([infeasible])

    rows = sorted(kept.values(), key=lambda r: (r.coeffs, r.bound))
    out = []
    for a in rows:
        da = a.as_dict()
        dominated = False
        for b in rows:
            if b is a or b.bound > a.bound:
                continue
            db = b.as_dict()
            ok = True
            for k in set(da) | set(db):
                va, vb = da.get(k, 0), db.get(k, 0)
                if k in nonneg:
                    if va > vb:
                        ok = False
                        break
                elif va != vb:
                    ok = False
                    break
            if ok and (b.bound < a.bound or da != db):
                dominated = True
                break
        if not dominated:
            out.append(a)
    return sys.with_rows(out)


def to_dense(sys: ConstraintSystem, rows: Optional[Sequence[LinIneq]] = None):
    """Coefficient matrix, bound vector and free-variable flags (exact)."""
    rows = sys.inequalities if rows is None else rows
    idx = {v: i for i, v in enumerate(sys.variables)}
    A = []
    for row in rows:
        a = [Fraction(0)] * len(sys.variables)
        for k, v in row.coeffs:
            a[idx[k]] = v
        A.append(a)
    b = [row.bound for row in rows]
    free = [v not in sys.nonneg for v in sys.variables]
    return A, b, free


def _maximize_row(sys: ConstraintSystem, rows: Sequence[LinIneq], target: LinIneq):
    A, b, free = to_dense(sys, rows)
    idx = {v: i for i, v in enumerate(sys.variables)}
    obj = [Fraction(0)] * len(sys.variables)
    for k, v in target.coeffs:
        obj[idx[k]] = v
    return lp_maximize(obj, A, b, free)


def prune_lp(sys: ConstraintSystem) -> ConstraintSystem:
    """Remove every row implied by the remaining ones (exact LP certificate).

    Rows are visited from last to first in sorted order so that, among
    mutually redundant rows, the lexicographically first one survives.
    """
    rows = sorted(sys.inequalities, key=lambda r: (r.coeffs, r.bound))
    i = len(rows) - 1
    while i >= 0:
        others = rows[:i] + rows[i + 1:]
        res = _maximize_row(sys, others, rows[i])
        if res.status == "infeasible" or (res.status == "optimal" and res.value <= rows[i].bound):
            rows = others
        i -= 1
    return sys.with_rows(rows)


# -- Fourier-Motzkin ----------------------------------------------------------

def _with_history(sys: ConstraintSystem) -> ConstraintSystem:
    if all(r.history for r in sys.inequalities):
        return sys
    rows = [replace(r, history=frozenset([("row", i)])) for i, r in enumerate(sys.inequalities)]
    return replace(sys, inequalities=tuple(rows), eliminated=0)


def fm_eliminate(sys: ConstraintSystem, var: str, lp_prune: bool = False) -> ConstraintSystem:
    """Project ``var`` out of the system by Fourier-Motzkin elimination."""
    if var not in sys.variables:
        raise ValueError(f"{var} is not a variable of the system")
    sys = _with_history(sys)
    upper, lower, rest = [], [], []
    for row in sys.inequalities:
        a = row.coeff(var)
        (upper if a > 0 else lower if a < 0 else rest).append(row)
    if var in sys.nonneg:
        lower.append(LinIneq.make({var: -1}, 0, f"{var}>=0", [("nonneg", var)]))
    combined = []
    for up in upper:
        au = up.coeff(var)
        du = up.as_dict()
        for lo in lower:
            al = -lo.coeff(var)
            co = {k: al * v for k, v in du.items()}
            for k, v in lo.coeffs:
                co[k] = co.get(k, 0) + au * v
            co.pop(var, None)
            label = f"{up.label}+{lo.label}" if up.label and lo.label else ""
            combined.append(LinIneq.make(co, al * up.bound + au * lo.bound, label,
                                         up.history | lo.history))
    out = ConstraintSystem(
        tuple(v for v in sys.variables if v != var),
        tuple(rest + combined),
        frozenset(sys.nonneg - {var}),
        sys.eliminated + 1,
    )
    out = prune_syntactic(out)
    return prune_lp(out) if lp_prune else out


def eliminate_all(sys: ConstraintSystem, variables: Sequence[str],
                  lp_prune: bool = True) -> ConstraintSystem:
    for v in variables:
        sys = fm_eliminate(sys, v, lp_prune=lp_prune)
    return sys


def project_raw_system(n: int, d: int, b_max: BufferSpec, lp_prune: bool = True) -> ConstraintSystem:
    """Eliminate every ``R_i_j`` (source-major order) from the raw system."""
    raw = build_raw_system(n, d, b_max)
    split = [v for v in raw.variables if v.startswith("R_")]
    out = eliminate_all(raw, split, lp_prune=lp_prune)
    return prune_lp(out) if lp_prune else out


# -- equivalence --------------------------------------------------------------

def _point_from(sys: ConstraintSystem, x: Sequence[Fraction]) -> Dict[str, Fraction]:
    return dict(zip(sys.variables, x))


def _contained(a: ConstraintSystem, b: ConstraintSystem):
    """Return ``None`` if ``a`` is a subset of ``b``, else a witness in ``a \\ b``."""
    rows_b = list(b.inequalities) + [
        LinIneq.make({v: -1}, 0, f"{v}>=0") for v in sorted(b.nonneg - a.nonneg)]
    # b's variable order may differ; evaluate over a's variables
    for row in rows_b:
        res = _maximize_row(a, a.inequalities, row)
        if res.status == "infeasible":
            return None
        if res.status == "optimal":
            if res.value > row.bound:
                return _point_from(a, res.x)
            continue
        # unbounded: walk along the ray until the row is violated
        x0, ray = res.x, res.ray
        idx = {v: i for i, v in enumerate(a.variables)}
        g0 = sum((v * x0[idx[k]] for k, v in row.coeffs), Fraction(0))
        gr = sum((v * ray[idx[k]] for k, v in row.coeffs), Fraction(0))
        t = max(Fraction(0), (row.bound - g0) / gr) + 1
        return _point_from(a, [x0[i] + t * ray[i] for i in range(len(x0))])
    return None


def _solve_exact(M: List[List[Fraction]], rhs: List[Fraction]):
    n = len(M)
    A = [row[:] + [v] for row, v in zip(M, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col]), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [v / p for v in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [A[i][n] for i in range(n)]


def _vertices(sys: ConstraintSystem, max_bases: int):
    A, b, _ = to_dense(sys)
    n = len(sys.variables)
    for j, v in enumerate(sys.variables):
        if v in sys.nonneg:
            e = [Fraction(0)] * n
            e[j] = Fraction(-1)
            A.append(e)
            b.append(Fraction(0))
    if math.comb(len(A), n) > max_bases:
        return
    for basis in itertools.combinations(range(len(A)), n):
        x = _solve_exact([A[i] for i in basis], [b[i] for i in basis])
        if x is None:
            continue
        if all(sum((aij * xj for aij, xj in zip(A[i], x)), Fraction(0)) <= b[i]
               for i in range(len(A))):
            yield _point_from(sys, x)


def systems_equivalent(a: ConstraintSystem, b: ConstraintSystem, trials: int = 200,
                       seed: int = 0, max_bases: int = 5000):
    """Decide whether two systems describe the same polyhedron.

    Returns ``(equal, witness)`` where ``witness`` is a point (dict of
    Fractions) lying in exactly one of the two sets when they differ.
    Containment is certified both ways by exact LP; vertices (dimension <= 6)
    and random rational points are checked as well.
    """
    if set(a.variables) != set(b.variables):
        raise ValueError(
            f"variable sets differ: {sorted(set(a.variables) ^ set(b.variables))}")
    b = replace(b, variables=a.variables)
    for x, y in ((a, b), (b, a)):
        w = _contained(x, y)
        if w is not None:
            return False, w
    if len(a.variables) <= 6:
        for x, y in ((a, b), (b, a)):
            for v in _vertices(x, max_bases):
                if not y.contains(v):
                    return False, v
    rng = random.Random(seed)
    for _ in range(trials):
        pt = {v: Fraction(rng.randint(-4, 32), 8) for v in a.variables}
        if a.contains(pt) != b.contains(pt):
            return False, pt
    return True, None


# -- text format --------------------------------------------------------------

def _fmt_frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def format_row(row: LinIneq, order: Sequence[str]) -> str:
    pos = {v: i for i, v in enumerate(order)}
    terms = sorted(row.coeffs, key=lambda kv: pos.get(kv[0], len(pos)))
    lhs = " ".join(f"{'+' if v > 0 else '-'}{_fmt_frac(abs(v))}*{k}" for k, v in terms)
    return f"{lhs or '0'} <= {_fmt_frac(row.bound)}"


def format_system(sys: ConstraintSystem) -> str:
    lines = [
        "# variables: " + " ".join(sys.variables),
        "# nonneg: " + " ".join(v for v in sys.variables if v in sys.nonneg),
    ]
    lines += [format_row(r, sys.variables) for r in sys.inequalities]
    return "\n".join(lines) + "\n"


_TERM = re.compile(r"([+-])\s*([0-9]+(?:/[0-9]+)?)\*([A-Za-z_][A-Za-z_0-9]*)")


def parse_system(text: str) -> ConstraintSystem:
    variables: List[str] = []
    nonneg: List[str] = []
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            if key.strip() == "variables":
                variables = val.split()
            elif key.strip() == "nonneg":
                nonneg = val.split()
            continue
        lhs, _, rhs = line.partition("<=")
        co: Dict[str, Fraction] = {}
        for sign, num, var in _TERM.findall(lhs):
            co[var] = co.get(var, 0) + (Fraction(num) if sign == "+" else -Fraction(num))
            if var not in variables:
                variables.append(var)
        rows.append(LinIneq.make(co, Fraction(rhs.strip())))
    return ConstraintSystem(tuple(variables), tuple(rows), frozenset(nonneg))
