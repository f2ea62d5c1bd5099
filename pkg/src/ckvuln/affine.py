"""Exact affine expressions and comparison atoms over named real variables."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

RELOPS = ("<", "<=", ">", ">=")
_NEGATED = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_FLIPPED = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}

# Relative error allowance for the floating-point sign filter. Affine forms
# here have a handful of terms, so the accumulated rounding error is orders of
# magnitude below this.
_FILTER_RTOL = 1e-12


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value)


def format_fraction(q: Fraction) -> str:
    """Decimal text for q: exact when q has a terminating expansion."""
    if q.denominator == 1:
        return str(q.numerator)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        scaled = q * 10**digits
        sign = "-" if scaled < 0 else ""
        s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
        return f"{sign}{s[:-digits]}.{s[-digits:]}"
    return repr(float(q))


@dataclass(frozen=True)
class AffineExpr:
    """sum(coeff * var) + constant with rational data."""

    terms: tuple[tuple[str, Fraction], ...] = ()
    constant: Fraction = Fraction(0)
    _fterms: tuple = field(default=(), init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        merged: dict[str, Fraction] = {}
        for name, c in self.terms:
            merged[name] = merged.get(name, Fraction(0)) + to_fraction(c)
        terms = tuple(sorted((n, c) for n, c in merged.items() if c != 0))
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "constant", to_fraction(self.constant))
        object.__setattr__(self, "_fterms", tuple((n, float(c)) for n, c in terms))

    @classmethod
    def const(cls, value) -> AffineExpr:
        return cls((), to_fraction(value))

    @classmethod
    def var(cls, name: str) -> AffineExpr:
        return cls(((name, Fraction(1)),))

    @property
    def coeffs(self) -> dict[str, Fraction]:
        return dict(self.terms)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: AffineExpr) -> AffineExpr:
        return AffineExpr(self.terms + other.terms, self.constant + other.constant)

    def __neg__(self) -> AffineExpr:
        return AffineExpr(tuple((n, -c) for n, c in self.terms), -self.constant)

    def __sub__(self, other: AffineExpr) -> AffineExpr:
        return self + (-other)

    def scale(self, k) -> AffineExpr:
        k = to_fraction(k)
        return AffineExpr(tuple((n, c * k) for n, c in self.terms), self.constant * k)

    def substitute(self, env: Mapping[str, AffineExpr]) -> AffineExpr:
        out = AffineExpr.const(self.constant)
        for name, c in self.terms:
            out = out + (env[name].scale(c) if name in env else AffineExpr(((name, c),)))
        return out

    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        total = self.constant
        for name, c in self.terms:
            total += c * to_fraction(point[name])
        return total

    def evaluate_float(self, point: Mapping[str, float]):
        """Floating evaluation; works elementwise on numpy arrays too."""
        total = float(self.constant)
        for name, c in self._fterms:
            total = total + c * point[name]
        return total

    def sign_at(self, point: Mapping[str, float]) -> int:
        """Exact sign of the expression at a floating-point input point."""
        approx = float(self.constant)
        scale = abs(approx)
        for name, c in self._fterms:
            t = c * point[name]
            approx += t
            scale += abs(t)
        if abs(approx) > _FILTER_RTOL * scale:
            return 1 if approx > 0 else -1
        exact = self.evaluate(point)
        return (exact > 0) - (exact < 0)

    def __str__(self) -> str:
        parts = []
        for name, c in self.terms:
            if c == 1:
                parts.append(f"+ {name}")
            elif c == -1:
                parts.append(f"- {name}")
            elif c < 0:
                parts.append(f"- {format_fraction(-c)}*{name}")
            else:
                parts.append(f"+ {format_fraction(c)}*{name}")
        if self.constant != 0 or not parts:
            c = self.constant
            parts.append(f"- {format_fraction(-c)}" if c < 0 else f"+ {format_fraction(c)}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


@dataclass(frozen=True)
class Atom:
    """The comparison ``expr op 0``."""

    expr: AffineExpr
    op: str

    def __post_init__(self):
        if self.op not in RELOPS:
            raise ValueError(f"bad relational operator {self.op!r}")

    @classmethod
    def compare(cls, lhs: AffineExpr, op: str, rhs: AffineExpr) -> Atom:
        return cls(lhs - rhs, op)

    @property
    def strict(self) -> bool:
        return self.op in ("<", ">")

    def negate(self) -> Atom:
        return Atom(self.expr, _NEGATED[self.op])

    def closure(self) -> Atom:
        return Atom(self.expr, self.op + "=" if self.strict else self.op)

    def substitute(self, env: Mapping[str, AffineExpr]) -> Atom:
        return Atom(self.expr.substitute(env), self.op)

    def constant_truth(self) -> bool | None:
        """Truth value when the atom mentions no variables, else None."""
        if not self.expr.is_constant():
            return None
        return _holds(self.op, (self.expr.constant > 0) - (self.expr.constant < 0))

    def holds(self, point: Mapping[str, object]) -> bool:
        v = self.expr.evaluate(point)
        return _holds(self.op, (v > 0) - (v < 0))

    def holds_float(self, point: Mapping[str, float]) -> bool:
        """Exact truth at a floating-point point (filtered rational check)."""
        return _holds(self.op, self.expr.sign_at(point))

    def __str__(self) -> str:
        # present as "lhs op rhs" with the constant moved to the right
        expr, op = self.expr, self.op
        if expr.terms and expr.terms[0][1] < 0:
            expr, op = -expr, _FLIPPED[op]
        lhs = AffineExpr(expr.terms)
        rhs = -expr.constant
        if not lhs.terms:
            return f"0 {op} {format_fraction(rhs)}"
        return f"{lhs} {op} {format_fraction(rhs)}"


def _holds(op: str, sign: int) -> bool:
    if op == "<":
        return sign < 0
    if op == "<=":
        return sign <= 0
    if op == ">":
        return sign > 0
    return sign >= 0
