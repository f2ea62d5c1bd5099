"""STL abstract syntax with step-indexed intervals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from ..affine import AffineExpr, format_fraction
from ..errors import NegativeInterval

_NEG_OP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}


@dataclass(frozen=True)
class Pred:
    """``expr op 0`` over channel names."""

    expr: AffineExpr
    op: str

    @classmethod
    def compare(cls, lhs: AffineExpr, op: str, rhs: AffineExpr) -> Pred:
        return cls(lhs - rhs, op)

    @classmethod
    def bound(cls, channel: str, op: str, value) -> Pred:
        """``channel op value`` with a numeric right-hand side."""
        return cls(AffineExpr.var(channel) - AffineExpr.const(Fraction(value)), op)

    def __str__(self):
        terms = AffineExpr(self.expr.terms)
        rhs = -self.expr.constant
        lhs = str(terms) if terms.terms else "0"
        return f"{lhs} {self.op} {_num(rhs)}"


@dataclass(frozen=True)
class Not:
    child: object

    def __str__(self):
        return f"!({self.child})"


@dataclass(frozen=True)
class And:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def __str__(self):
        return " & ".join(f"({c})" for c in self.children) if self.children else "(0 < 1)"


@dataclass(frozen=True)
class Or:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def __str__(self):
        return " | ".join(f"({c})" for c in self.children) if self.children else "(1 < 0)"


def _check(lo, hi):
    if lo < 0:
        raise NegativeInterval(f"interval start {lo} is negative")
    if hi is not None and lo > hi:
        raise NegativeInterval(f"interval [{lo},{hi}] has start after end")


def _interval(lo, hi) -> str:
    return f"[{lo},{'inf' if hi is None else hi}]"


@dataclass(frozen=True)
class Always:
    lo: int
    hi: int | None
    child: object

    def __post_init__(self):
        _check(self.lo, self.hi)

    def __str__(self):
        return f"G{_interval(self.lo, self.hi)}({self.child})"


@dataclass(frozen=True)
class Eventually:
    lo: int
    hi: int | None
    child: object

    def __post_init__(self):
        _check(self.lo, self.hi)

    def __str__(self):
        return f"F{_interval(self.lo, self.hi)}({self.child})"


@dataclass(frozen=True)
class Until:
    lo: int
    hi: int | None
    left: object
    right: object

    def __post_init__(self):
        _check(self.lo, self.hi)

    def __str__(self):
        return f"({self.left}) U{_interval(self.lo, self.hi)} ({self.right})"


def _num(q: Fraction) -> str:
    return format_fraction(q)


def conj(items: Iterable) -> object:
    items = list(items)
    return items[0] if len(items) == 1 else And(tuple(items))


def disj(items: Iterable) -> object:
    items = list(items)
    return items[0] if len(items) == 1 else Or(tuple(items))


def at_step(t: int, f) -> Eventually:
    """``f`` evaluated exactly at step ``t`` (relative to time 0)."""
    return Eventually(t, t, f)


def negate(f):
    """Formula whose robustness is the exact negation of ``f``'s."""
    if isinstance(f, Pred):
        return Pred(f.expr, _NEG_OP[f.op])
    if isinstance(f, Not):
        return f.child
    if isinstance(f, And):
        return Or(tuple(negate(c) for c in f.children))
    if isinstance(f, Or):
        return And(tuple(negate(c) for c in f.children))
    if isinstance(f, Always):
        return Eventually(f.lo, f.hi, negate(f.child))
    if isinstance(f, Eventually):
        return Always(f.lo, f.hi, negate(f.child))
    if isinstance(f, Until):
        return Not(f)
    raise TypeError(f"not a formula: {f!r}")


def channels(f) -> set[str]:
    if isinstance(f, Pred):
        return set(f.expr.variables)
    if isinstance(f, (Not, Always, Eventually)):
        return channels(f.child)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for c in f.children:
            out |= channels(c)
        return out
    if isinstance(f, Until):
        return channels(f.left) | channels(f.right)
    raise TypeError(f"not a formula: {f!r}")


def depth(f) -> int:
    if isinstance(f, Pred):
        return 0
    if isinstance(f, (Not, Always, Eventually)):
        return 1 + depth(f.child)
    if isinstance(f, (And, Or)):
        return 1 + max((depth(c) for c in f.children), default=0)
    return 1 + max(depth(f.left), depth(f.right))
