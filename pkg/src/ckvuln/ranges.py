"""Exact per-path control ranges.

A small dense two-phase simplex over :class:`fractions.Fraction` with Bland's
rule solves the range optimisation for each path cube. All problems here have
a finite box on every variable, so unboundedness indicates a bug.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .affine import AffineExpr, Atom, format_fraction, to_fraction
from .errors import Infeasible, Unbounded

Box = Mapping[str, tuple[Fraction, Fraction]]

_EPS = "__eps__"


@dataclass(frozen=True)
class LinearProgram:
    objective: AffineExpr
    sense: str
    constraints: tuple[Atom, ...]
    box: Box

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        object.__setattr__(self, "constraints", tuple(self.constraints))


@dataclass(frozen=True)
class LPSolution:
    value: Fraction
    witness: dict[str, Fraction]
    attained: bool


# -- simplex core -----------------------------------------------------------


def _pivot(T: list[list[Fraction]], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        T[r] = row = [v / p for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f != 0:
                T[i] = [a - f * b for a, b in zip(other, row)]


def _run_simplex(T, basis, obj, allowed) -> None:
    """Maximise ``obj . x`` over the tableau in place (Bland's rule)."""
    ncol = len(obj)
    while True:
        enter = -1
        for j in range(ncol):
            if not allowed[j] or j in basis:
                continue
            reduced = obj[j]
            for i, bi in enumerate(basis):
                t = T[i][j]
                if t != 0:
                    reduced -= obj[bi] * t
            if reduced > 0:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best = None
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave < 0:
            raise Unbounded("linear program is unbounded")
        _pivot(T, leave, enter)
        basis[leave] = enter


def _maximize(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """max c.z s.t. A z <= b, z >= 0. Returns (value, z)."""
    n, m = len(c), len(A)
    art_rows = [i for i in range(m) if b[i] < 0]
    ncol = n + m + len(art_rows)
    T: list[list[Fraction]] = []
    basis: list[int] = []
    for i in range(m):
        row = [Fraction(0)] * (ncol + 1)
        sign = -1 if b[i] < 0 else 1
        for j in range(n):
            row[j] = sign * A[i][j]
        row[n + i] = Fraction(sign)
        row[-1] = sign * b[i]
        if sign < 0:
            k = n + m + art_rows.index(i)
            row[k] = Fraction(1)
            basis.append(k)
        else:
            basis.append(n + i)
        T.append(row)

    allowed = [True] * ncol
    if art_rows:
        phase1 = [Fraction(0)] * (n + m) + [Fraction(-1)] * len(art_rows)
        _run_simplex(T, basis, phase1, allowed)
        if any(T[i][-1] != 0 for i, bi in enumerate(basis) if bi >= n + m):
            raise Infeasible("no point satisfies the constraints")
        # drive zero-level artificials out of the basis
        i = 0
        while i < len(T):
            if basis[i] >= n + m:
                j = next((j for j in range(n + m) if T[i][j] != 0), None)
                if j is None:
                    del T[i], basis[i]
                    continue
                _pivot(T, i, j)
                basis[i] = j
            i += 1
        for k in range(n + m, ncol):
            allowed[k] = False

    obj = list(c) + [Fraction(0)] * (ncol - n)
    _run_simplex(T, basis, obj, allowed)
    z = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        if bi < n:
            z[bi] = T[i][-1]
    value = sum((ci * zi for ci, zi in zip(c, z)), Fraction(0))
    return value, z


# -- LP front end -----------------------------------------------------------


def _standard_form(objective: AffineExpr, atoms: Iterable[Atom], box: Box):
    names = list(box)
    index = {v: i for i, v in enumerate(names)}
    lo = [to_fraction(box[v][0]) for v in names]
    hi = [to_fraction(box[v][1]) for v in names]
    A, b = [], []

    def dense(expr: AffineExpr):
        row = [Fraction(0)] * len(names)
        for v, coef in expr.terms:
            if v not in index:
                raise ValueError(f"variable {v!r} has no box bounds")
            row[index[v]] = coef
        # substitute y = lo + z
        shift = expr.constant + sum((row[i] * lo[i] for i in range(len(names))), Fraction(0))
        return row, shift

    for i in range(len(names)):
        if hi[i] < lo[i]:
            raise Infeasible(f"empty box for {names[i]}")
        row = [Fraction(0)] * len(names)
        row[i] = Fraction(1)
        A.append(row)
        b.append(hi[i] - lo[i])
    for atom in atoms:
        row, shift = dense(atom.expr)
        if atom.op in ("<", "<="):
            A.append(row)
            b.append(-shift)
        else:
            A.append([-v for v in row])
            b.append(shift)
    c, c0 = dense(objective)
    return names, lo, c, c0, A, b


def _feasible_point(atoms: Sequence[Atom], box: Box) -> dict[str, Fraction] | None:
    """A point satisfying the atoms as written, or None.

    Strict atoms get a shared slack ``eps`` that is maximised; the region is
    nonempty iff the optimum is positive, so thin strict regions are empty.
    """
    strict = [a for a in atoms if a.strict]
    if not strict:
        try:
            names, lo, c, _, A, b = _standard_form(AffineExpr(), atoms, box)
            _, z = _maximize(c, A, b)
        except Infeasible:
            return None
        return {v: lo[i] + z[i] for i, v in enumerate(names)}
    eps = AffineExpr.var(_EPS)
    relaxed = []
    for a in atoms:
        if a.op == "<":
            relaxed.append(Atom(a.expr + eps, "<="))
        elif a.op == ">":
            relaxed.append(Atom(a.expr - eps, ">="))
        else:
            relaxed.append(a)
    ebox = dict(box)
    ebox[_EPS] = (Fraction(0), Fraction(1))
    try:
        names, lo, c, _, A, b = _standard_form(eps, relaxed, ebox)
        value, z = _maximize(c, A, b)
    except Infeasible:
        return None
    if value <= 0:
        return None
    return {v: lo[i] + z[i] for i, v in enumerate(names) if v != _EPS}


def feasible(atoms: Iterable[Atom], box: Box) -> bool:
    """True iff some point of the box satisfies every atom as written."""
    atoms = list(atoms)
    for a in atoms:
        t = a.constant_truth()
        if t is False:
            return False
    atoms = [a for a in atoms if a.constant_truth() is None]
    return _feasible_point(atoms, box) is not None


def solve_lp(lp: LinearProgram) -> LPSolution:
    """Optimise over the closure of the constraints; flag attainment.

    Raises :class:`Infeasible` when no point satisfies the constraints as
    written (strict atoms included).
    """
    atoms = [a for a in lp.constraints if a.constant_truth() is None]
    if any(a.constant_truth() is False for a in lp.constraints):
        raise Infeasible("constant-false constraint")
    if _feasible_point(atoms, lp.box) is None:
        raise Infeasible("no point satisfies the constraints")
    closed = [a.closure() for a in atoms]
    sign = 1 if lp.sense == "max" else -1
    names, lo, c, c0, A, b = _standard_form(lp.objective.scale(sign), closed, lp.box)
    value, z = _maximize(c, A, b)
    value = sign * (value + c0)
    witness = {v: lo[i] + z[i] for i, v in enumerate(names)}
    attained = True
    if any(a.strict for a in atoms):
        level = lp.objective - AffineExpr.const(value)
        attained = _feasible_point(atoms + [Atom(level, "<="), Atom(level, ">=")], lp.box) is not None
    return LPSolution(value, witness, attained)


# -- path ranges ------------------------------------------------------------


@dataclass(frozen=True)
class PathRange:
    path_id: int
    lo: dict[str, Fraction]
    hi: dict[str, Fraction]
    lo_attained: dict[str, bool]
    hi_attained: dict[str, bool]

    def interval(self, var: str) -> tuple[Fraction, Fraction]:
        return self.lo[var], self.hi[var]

    def contains(self, values: Mapping[str, float]) -> bool:
        """Closure membership of a control value (floating input)."""
        return all(self.lo[v] <= to_fraction(values[v]) <= self.hi[v] for v in self.lo)


@dataclass(frozen=True)
class RangeTable:
    ranges: tuple[PathRange, ...]
    control_vars: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.ranges)

    def of(self, path_id: int) -> PathRange:
        return self.ranges[path_id - 1]

    @property
    def global_lo(self) -> dict[str, Fraction]:
        return {v: min(r.lo[v] for r in self.ranges) for v in self.control_vars}

    @property
    def global_hi(self) -> dict[str, Fraction]:
        return {v: max(r.hi[v] for r in self.ranges) for v in self.control_vars}

    def overlaps(self) -> list[tuple[int, int]]:
        """Pairs of paths whose closed range boxes intersect."""
        out = []
        for i, a in enumerate(self.ranges):
            for b in self.ranges[i + 1:]:
                if all(max(a.lo[v], b.lo[v]) <= min(a.hi[v], b.hi[v]) for v in self.control_vars):
                    out.append((a.path_id, b.path_id))
        return out

    def to_rows(self) -> list[dict]:
        rows = []
        for r in self.ranges:
            for v in self.control_vars:
                rows.append({
                    "path_id": r.path_id,
                    "control_var": v,
                    "lo": _qjson(r.lo[v]),
                    "hi": _qjson(r.hi[v]),
                    "lo_attained": r.lo_attained[v],
                    "hi_attained": r.hi_attained[v],
                })
        return rows

    def to_json(self) -> str:
        return json.dumps(self.to_rows(), indent=2)

    @classmethod
    def from_rows(cls, rows: Sequence[Mapping]) -> RangeTable:
        by_path: dict[int, dict] = {}
        controls: list[str] = []
        for row in rows:
            v = row["control_var"]
            if v not in controls:
                controls.append(v)
            d = by_path.setdefault(row["path_id"], {"lo": {}, "hi": {}, "la": {}, "ha": {}})
            d["lo"][v] = Fraction(row["lo"]["num"], row["lo"]["den"])
            d["hi"][v] = Fraction(row["hi"]["num"], row["hi"]["den"])
            d["la"][v] = row["lo_attained"]
            d["ha"][v] = row["hi_attained"]
        ranges = tuple(
            PathRange(pid, d["lo"], d["hi"], d["la"], d["ha"]) for pid, d in sorted(by_path.items())
        )
        return cls(ranges, tuple(controls))


def _qjson(q: Fraction) -> dict:
    return {"decimal": format_fraction(q), "num": q.numerator, "den": q.denominator}


def path_ranges(table) -> RangeTable:
    """Min and max of every path function under its path constraint."""
    ranges = []
    for entry in table.entries:
        lo, hi, la, ha = {}, {}, {}, {}
        for var in table.control_vars:
            expr = entry.function.outputs[var]
            best_lo = best_hi = None
            for cube in entry.constraint.cubes:
                mn = solve_lp(LinearProgram(expr, "min", cube, table.box))
                mx = solve_lp(LinearProgram(expr, "max", cube, table.box))
                if best_lo is None or mn.value < best_lo[0]:
                    best_lo = (mn.value, mn.attained)
                elif mn.value == best_lo[0]:
                    best_lo = (mn.value, best_lo[1] or mn.attained)
                if best_hi is None or mx.value > best_hi[0]:
                    best_hi = (mx.value, mx.attained)
                elif mx.value == best_hi[0]:
                    best_hi = (mx.value, best_hi[1] or mx.attained)
            lo[var], la[var] = best_lo
            hi[var], ha[var] = best_hi
        ranges.append(PathRange(entry.constraint.path_id, lo, hi, la, ha))
    return RangeTable(tuple(ranges), tuple(table.control_vars))
