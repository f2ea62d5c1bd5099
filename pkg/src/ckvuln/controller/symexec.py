"""Forward symbolic execution of controller IR into a path table.

Each program path (one branch decision per executed ``if``) carries a guard
made of disjoint conjunctive cubes: negated or disjunctive conditions are
split by short-circuit expansion (``not(a and b) = not a or (a and not b)``),
so every cube is a pure conjunction of affine atoms and the cubes of one path
never overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ..affine import AffineExpr, Atom, to_fraction
from ..errors import NoFeasiblePath, OutOfDomain, PathExplosion, UndefinedVariable
from ..ranges import feasible
from .parser import BoolAnd, BoolNot, BoolOr, Compare, ControllerIR, If, to_affine

Cube = tuple[Atom, ...]

DEFAULT_PATH_CAP = 4096


@dataclass(frozen=True)
class PathConstraint:
    path_id: int
    cubes: tuple[Cube, ...]

    @property
    def atoms(self) -> tuple[Atom, ...]:
        """Atoms of a single-cube constraint (the common case)."""
        if len(self.cubes) != 1:
            raise ValueError("constraint is a union of several cubes")
        return self.cubes[0]

    def holds(self, point: Mapping[str, float]) -> bool:
        return any(all(a.holds_float(point) for a in cube) for cube in self.cubes)

    def __str__(self) -> str:
        parts = []
        for cube in self.cubes:
            parts.append(" && ".join(f"({a})" for a in cube) or "true")
        return " || ".join(f"[{p}]" for p in parts) if len(parts) > 1 else parts[0]


@dataclass(frozen=True)
class PathFunction:
    outputs: Mapping[str, AffineExpr]

    def evaluate(self, point: Mapping[str, object]) -> dict[str, Fraction]:
        return {k: e.evaluate(point) for k, e in self.outputs.items()}


@dataclass(frozen=True)
class PathEntry:
    constraint: PathConstraint
    function: PathFunction
    decisions: tuple[bool, ...]


@dataclass(frozen=True)
class PathTable:
    entries: tuple[PathEntry, ...]
    input_vars: tuple[str, ...]
    box: Mapping[str, tuple[Fraction, Fraction]]
    control_vars: tuple[str, ...]
    pruned: tuple[tuple[tuple[bool, ...], Cube], ...] = ()
    _by_decisions: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_decisions", {e.decisions: e.constraint.path_id for e in self.entries})

    @property
    def k(self) -> int:
        return len(self.entries)

    def entry(self, path_id: int) -> PathEntry:
        return self.entries[path_id - 1]

    def path_for_decisions(self, decisions: tuple[bool, ...]) -> int:
        return self._by_decisions[decisions]

    def point(self, y) -> dict[str, float]:
        if isinstance(y, Mapping):
            return {v: y[v] for v in self.input_vars}
        y = list(y)
        if len(y) != len(self.input_vars):
            raise ValueError(f"expected {len(self.input_vars)} inputs, got {len(y)}")
        return dict(zip(self.input_vars, y))

    def in_box(self, y) -> bool:
        p = self.point(y)
        return all(self.box[v][0] <= to_fraction(p[v]) <= self.box[v][1] for v in self.input_vars)

    def clamp(self, y) -> dict[str, float]:
        p = self.point(y)
        return {v: min(max(float(p[v]), float(self.box[v][0])), float(self.box[v][1])) for v in self.input_vars}

    def digest(self) -> list[dict]:
        return [
            {
                "path_id": e.constraint.path_id,
                "decisions": list(e.decisions),
                "constraint": str(e.constraint),
                "cubes": [[str(a) for a in cube] for cube in e.constraint.cubes],
                "function": {k: str(v) for k, v in e.function.outputs.items()},
            }
            for e in self.entries
        ]


def path_of(table: PathTable, y) -> int:
    """Index of the unique path whose constraint holds at ``y`` (exact)."""
    point = table.point(y)
    if not all(math.isfinite(float(v)) for v in point.values()):
        raise OutOfDomain(f"non-finite input {point}")
    for e in table.entries:
        if e.constraint.holds(point):
            return e.constraint.path_id
    raise OutOfDomain(f"no path constraint holds at {point}")


def path_of_batch(table: PathTable, ys: Mapping[str, np.ndarray], strict: bool = True) -> np.ndarray:
    """Vectorised :func:`path_of`; near-boundary points are decided exactly.

    With ``strict=False`` points matching no constraint map to 0 instead of
    raising :class:`OutOfDomain`.
    """
    arrays = {v: np.asarray(ys[v], dtype=float) for v in table.input_vars}
    shape = np.broadcast(*arrays.values()).shape
    out = np.zeros(shape, dtype=np.int64)
    unsure = np.zeros(shape, dtype=bool)
    for e in table.entries:
        hit = np.zeros(shape, dtype=bool)
        for cube in e.constraint.cubes:
            ok = np.ones(shape, dtype=bool)
            for a in cube:
                val = a.expr.evaluate_float(arrays)
                scale = abs(float(a.expr.constant)) + sum(abs(c) * np.abs(arrays[n]) for n, c in a.expr._fterms)
                unsure |= np.abs(val) <= 1e-12 * scale
                if a.op == "<":
                    ok &= val < 0
                elif a.op == "<=":
                    ok &= val <= 0
                elif a.op == ">":
                    ok &= val > 0
                else:
                    ok &= val >= 0
            hit |= ok
        out = np.where((out == 0) & hit, e.constraint.path_id, out)
    redo = unsure | (out == 0)
    if redo.any():
        for idx in zip(*np.nonzero(redo)):
            point = {v: float(np.broadcast_to(arrays[v], shape)[idx]) for v in table.input_vars}
            try:
                out[idx] = path_of(table, point)
            except OutOfDomain:
                if strict:
                    raise
                out[idx] = 0
    return out


# -- condition normal forms -----------------------------------------------------


def _dnf(cond, env, positive: bool) -> list[Cube]:
    """Disjoint DNF of ``cond`` (or of its negation) after substitution."""
    if isinstance(cond, Compare):
        atom = Atom.compare(_subst(cond.lhs, env), cond.op, _subst(cond.rhs, env))
        if not positive:
            atom = atom.negate()
        truth = atom.constant_truth()
        if truth is True:
            return [()]
        if truth is False:
            return []
        return [(atom,)]
    if isinstance(cond, BoolNot):
        return _dnf(cond.item, env, not positive)
    is_and = isinstance(cond, BoolAnd)
    if is_and == positive:
        # plain conjunction of the parts
        out: list[Cube] = [()]
        for item in cond.items:
            out = [a + b for a in out for b in _dnf(item, env, positive)]
        return out
    # disjunction: first part, or (not first and second), ...
    out = []
    prefix: list[Cube] = [()]
    for item in cond.items:
        out.extend(a + b for a in prefix for b in _dnf(item, env, not is_and))
        prefix = [a + b for a in prefix for b in _dnf(item, env, is_and)]
    return out


def _subst(expr, env) -> AffineExpr:
    aff = to_affine(expr)
    for name in aff.variables:
        if name not in env:
            raise UndefinedVariable(f"variable {name!r} read before assignment")
    return aff.substitute(env)


def extract_paths(
    ir: ControllerIR,
    box: Mapping[str, tuple],
    controls: Sequence[str] | None = None,
    cap: int = DEFAULT_PATH_CAP,
) -> PathTable:
    """Enumerate the feasible program paths over ``box``."""
    for p in ir.params:
        if p not in box:
            raise ValueError(f"no box bounds for input {p!r}")
    qbox = {p: (to_fraction(box[p][0]), to_fraction(box[p][1])) for p in ir.params}
    controls = tuple(controls or (ir.returns,))
    leaves: list[tuple[tuple[bool, ...], list[Cube], dict]] = []
    pruned: list[tuple[tuple[bool, ...], Cube]] = []

    def conjoin(cubes: list[Cube], extra: list[Cube], decisions) -> list[Cube]:
        out = []
        for a in cubes:
            for b in extra:
                cube = a + b
                if feasible(cube, qbox):
                    out.append(cube)
                else:
                    pruned.append((decisions, cube))
        return out

    def run(stmts: tuple, env: dict, cubes: list[Cube], decisions: tuple[bool, ...]):
        for i, s in enumerate(stmts):
            if isinstance(s, If):
                rest = stmts[i + 1:]
                for taken in (True, False):
                    d = decisions + (taken,)
                    sub = conjoin(cubes, _dnf(s.cond, env, taken), d)
                    if sub:
                        run((s.then if taken else s.orelse) + rest, dict(env), sub, d)
                return
            try:
                env[s.target] = _subst(s.expr, env)
            except UndefinedVariable as exc:
                raise UndefinedVariable(str(exc), s.line, 1) from None
        outputs = {}
        for c in controls:
            if c not in env:
                raise UndefinedVariable(f"control variable {c!r} unassigned on a feasible path")
            outputs[c] = env[c]
        leaves.append((decisions, cubes, outputs))
        if len(leaves) > cap:
            raise PathExplosion(f"more than {cap} feasible paths")

    start = {p: AffineExpr.var(p) for p in ir.params}
    root: list[Cube] = [()] if feasible((), qbox) else []
    if root:
        run(ir.body, start, root, ())
    if not leaves:
        raise NoFeasiblePath("no program path is feasible over the input box")
    entries = tuple(
        PathEntry(PathConstraint(i + 1, tuple(cubes)), PathFunction(outputs), decisions)
        for i, (decisions, cubes, outputs) in enumerate(leaves)
    )
    return PathTable(entries, tuple(ir.params), qbox, controls, tuple(pruned))
