"""Text syntax for STL formulas.

    f    := pred | "!" f | f "&" f | f "|" f | "(" f ")"
          | "G" [a,b] f | "F" [a,b] f | f "U" [a,b] f
    pred := affine relop affine        relop in < <= > >=

``&&``/``||`` are accepted as aliases; ``b`` may be ``inf`` (end of trace).
Binding from loosest: ``|``, ``&``, ``U``, then the prefix operators.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..affine import AffineExpr
from ..errors import StlSyntaxError
from .formula import Always, And, Eventually, Not, Or, Pred, Until

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>->|<->|&&|\|\||<=|>=|==|!=|[-+*/<>!&|()\[\],=])"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise StlSyntaxError(f"unexpected character {text[pos]!r}", 1, pos + 1)
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group(), pos + 1))
            pos = m.end()
        self.toks.append(("eof", "", len(text) + 1))
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg):
        return StlSyntaxError(msg, 1, self.tok[2])

    def at(self, text):
        return self.tok[1] == text and self.tok[0] != "num"

    def expect(self, text):
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok[1] or 'end of input'!r}")
        self.i += 1

    def is_temporal(self, name):
        kind, text, _ = self.tok
        return kind == "ident" and text == name and self.toks[self.i + 1][1] == "["

    def formula(self):
        f = self.disjunction()
        if self.tok[1] in ("->", "<->", "==", "!=", "="):
            raise self.error(f"operator {self.tok[1]!r} is not supported")
        return f

    def disjunction(self):
        items = [self.conjunction()]
        while self.tok[1] in ("|", "||"):
            self.i += 1
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self):
        items = [self.until()]
        while self.tok[1] in ("&", "&&"):
            self.i += 1
            items.append(self.until())
        return items[0] if len(items) == 1 else And(tuple(items))

    def until(self):
        left = self.unary()
        if self.is_temporal("U"):
            self.i += 1
            lo, hi = self.interval()
            right = self.unary()
            return Until(lo, hi, left, right)
        return left

    def interval(self):
        self.expect("[")
        lo = self.integer()
        self.expect(",")
        if self.tok[0] == "ident" and self.tok[1] in ("inf", "end"):
            hi = None
            self.i += 1
        else:
            hi = self.integer()
        self.expect("]")
        return lo, hi

    def integer(self) -> int:
        kind, text, _ = self.tok
        if kind != "num" or not text.isdigit():
            raise self.error(f"expected a step count, found {text or 'end of input'!r}")
        self.i += 1
        return int(text)

    def unary(self):
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        for name, cls in (("G", Always), ("F", Eventually)):
            if self.is_temporal(name):
                self.i += 1
                lo, hi = self.interval()
                return cls(lo, hi, self.unary())
        if self.at("("):
            save = self.i
            try:
                return self.predicate()
            except StlSyntaxError:
                self.i = save
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        return self.predicate()

    def predicate(self):
        lhs = self.affine()
        op = self.tok[1]
        if op not in ("<", "<=", ">", ">="):
            raise self.error(f"expected comparison operator, found {op or 'end of input'!r}")
        self.i += 1
        return Pred.compare(lhs, op, self.affine())

    def affine(self) -> AffineExpr:
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.tok[1]
            self.i += 1
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self) -> AffineExpr:
        node = self.factor()
        while self.tok[1] in ("*", "/"):
            op = self.tok[1]
            self.i += 1
            rhs = self.factor()
            if op == "/":
                if not rhs.is_constant() or rhs.constant == 0:
                    raise self.error("division only by a nonzero constant")
                node = node.scale(1 / rhs.constant)
            elif node.is_constant():
                node = rhs.scale(node.constant)
            elif rhs.is_constant():
                node = node.scale(rhs.constant)
            else:
                raise self.error("product of two channels is not affine")
        return node

    def factor(self) -> AffineExpr:
        kind, text, _ = self.tok
        if text in ("-", "+") and kind == "op":
            self.i += 1
            f = self.factor()
            return -f if text == "-" else f
        if kind == "num":
            self.i += 1
            return AffineExpr.const(Fraction(text))
        if kind == "ident":
            if self.toks[self.i + 1][1] == "[" and text in ("G", "F", "U"):
                raise self.error("temporal operator inside an arithmetic expression")
            self.i += 1
            return AffineExpr.var(text)
        if text == "(":
            self.i += 1
            e = self.affine()
            self.expect(")")
            return e
        raise self.error(f"unexpected {text or 'end of input'!r}")


def parse_stl(text: str):
    p = _Parser(text)
    if p.tok[0] == "eof":
        raise StlSyntaxError("empty formula", 1, 1)
    f = p.formula()
    if p.tok[0] != "eof":
        raise p.error(f"unexpected {p.tok[1]!r}")
    return f
