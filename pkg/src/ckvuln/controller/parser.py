"""Recursive-descent parser for the restricted C-like controller language.

Grammar (whitespace and ``//``/``/* */`` comments ignored)::

    program := "double" IDENT "(" params ")" "{" stmt* "return" IDENT ";" "}"
    params  := "double" IDENT ("," "double" IDENT)*
    stmt    := ["double"] IDENT "=" affine ";"
             | "double" IDENT ";"
             | "if" "(" cond ")" block ["else" (block | if-stmt)]
    block   := "{" stmt* "}" | stmt
    cond    := conj ("||" conj)*      conj := neg ("&&" neg)*
    neg     := "!" neg | "(" cond ")" | affine relop affine
    affine  := term (("+"|"-") term)*  term := unary ("*" unary)*
    unary   := ("-"|"+") unary | NUMBER | IDENT | "(" affine ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..affine import AffineExpr
from ..errors import ControllerSyntaxError, UnsupportedConstruct

# -- IR ----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction
    text: str

    @property
    def fvalue(self) -> float:
        return float(self.text)


@dataclass(frozen=True)
class Var:
    name: str
    line: int
    col: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    lhs: object
    op: str
    rhs: object


@dataclass(frozen=True)
class BoolAnd:
    items: tuple


@dataclass(frozen=True)
class BoolOr:
    items: tuple


@dataclass(frozen=True)
class BoolNot:
    item: object


@dataclass(frozen=True)
class Assign:
    target: str
    expr: object
    line: int


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple
    line: int


@dataclass(frozen=True)
class ControllerIR:
    name: str
    params: tuple[str, ...]
    body: tuple
    returns: str

    def leaf_count(self) -> int:
        """Number of syntactic branch leaves (feasible or not)."""
        return _count_leaves(self.body)


def _count_leaves(stmts) -> int:
    total = 1
    for s in stmts:
        if isinstance(s, If):
            total *= _count_leaves(s.then) + _count_leaves(s.orelse)
    return total


def to_affine(expr) -> AffineExpr:
    """Affine form of an expression AST (variables left symbolic)."""
    if isinstance(expr, Num):
        return AffineExpr.const(expr.value)
    if isinstance(expr, Var):
        return AffineExpr.var(expr.name)
    if isinstance(expr, Neg):
        return -to_affine(expr.operand)
    if expr.op == "+":
        return to_affine(expr.left) + to_affine(expr.right)
    if expr.op == "-":
        return to_affine(expr.left) - to_affine(expr.right)
    left, right = to_affine(expr.left), to_affine(expr.right)
    if left.is_constant():
        return right.scale(left.constant)
    return left.scale(right.constant)


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||<=|>=|==|!=|\+\+|--|\+=|-=|\*=|/=|[-+*/%<>=!(){};,\[\]&|^~?:.])
    """,
    re.VERBOSE | re.DOTALL,
)

_UNSUPPORTED_KEYWORDS = {
    "while", "for", "do", "switch", "case", "goto", "break", "continue",
    "int", "float", "long", "short", "char", "unsigned", "signed", "struct",
    "sizeof", "static", "const", "void",
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ControllerSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ControllerSyntaxError(msg, tok.line, tok.col)

    def unsupported(self, msg, tok=None):
        tok = tok or self.tok
        return UnsupportedConstruct(msg, tok.line, tok.col)

    def at(self, text) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self) -> Token:
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        if tok.text in _UNSUPPORTED_KEYWORDS:
            raise self.unsupported(f"'{tok.text}' is not supported")
        self.i += 1
        return tok

    # program structure

    def program(self) -> ControllerIR:
        if self.tok.kind == "eof":
            raise self.error("empty program")
        self.expect("double")
        name = self.ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                self.expect("double")
                params.append(self.ident().text)
                if not self.at(","):
                    break
                self.i += 1
        self.expect(")")
        self.expect("{")
        body = []
        while not self.at("return"):
            if self.tok.kind == "eof" or self.at("}"):
                raise self.error("missing return statement")
            body.extend(self.statement())
        self.expect("return")
        ret = self.ident().text
        self.expect(";")
        self.expect("}")
        if self.tok.kind != "eof":
            raise self.error("unexpected text after function body")
        if len(set(params)) != len(params):
            raise self.error("duplicate parameter name")
        return ControllerIR(name, tuple(params), tuple(body), ret)

    def statement(self) -> list:
        tok = self.tok
        if tok.kind == "ident" and tok.text in _UNSUPPORTED_KEYWORDS:
            raise self.unsupported(f"'{tok.text}' is not supported")
        if self.at("return"):
            raise self.unsupported("return is only allowed as the final statement")
        if self.at("if"):
            return [self.if_statement()]
        if self.at("{"):
            return list(self.block())
        if self.at("double"):
            self.i += 1
            target = self.ident()
            if self.at(";"):
                self.i += 1
                return []
            return [self.assignment(target)]
        target = self.ident()
        return [self.assignment(target)]

    def assignment(self, target: Token) -> Assign:
        if self.at("("):
            raise self.unsupported("function calls are not supported", target)
        if self.tok.text in ("+=", "-=", "*=", "/=", "++", "--"):
            raise self.unsupported(f"operator {self.tok.text!r} is not supported")
        self.expect("=")
        expr = self.affine()
        self.expect(";")
        return Assign(target.text, expr, target.line)

    def if_statement(self) -> If:
        tok = self.expect("if")
        self.expect("(")
        cond = self.disjunction()
        self.expect(")")
        then = self.block()
        orelse: tuple = ()
        if self.at("else"):
            self.i += 1
            orelse = (self.if_statement(),) if self.at("if") else self.block()
        return If(cond, then, orelse, tok.line)

    def block(self) -> tuple:
        if self.at("{"):
            self.i += 1
            out = []
            while not self.at("}"):
                if self.tok.kind == "eof":
                    raise self.error("unterminated block")
                out.extend(self.statement())
            self.i += 1
            return tuple(out)
        return tuple(self.statement())

    # conditions

    def disjunction(self):
        items = [self.conjunction()]
        while self.at("||"):
            self.i += 1
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else BoolOr(tuple(items))

    def conjunction(self):
        items = [self.negation()]
        while self.at("&&"):
            self.i += 1
            items.append(self.negation())
        return items[0] if len(items) == 1 else BoolAnd(tuple(items))

    def negation(self):
        if self.at("!"):
            self.i += 1
            return BoolNot(self.negation())
        if self.at("("):
            # either a parenthesised condition or an arithmetic group
            save = self.i
            try:
                self.i += 1
                inner = self.disjunction()
                self.expect(")")
                if self.tok.text in ("<", "<=", ">", ">=", "==", "!="):
                    raise self.error("arithmetic group")
                return inner
            except ControllerSyntaxError:
                self.i = save
        return self.comparison()

    def comparison(self) -> Compare:
        lhs = self.affine()
        tok = self.tok
        if tok.text in ("==", "!="):
            raise self.unsupported(f"comparison {tok.text!r} is not supported")
        if tok.text not in ("<", "<=", ">", ">="):
            raise self.error(f"expected comparison operator, found {tok.text or 'end of input'!r}")
        self.i += 1
        rhs = self.affine()
        return Compare(lhs, tok.text, rhs)

    # arithmetic

    def affine(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/", "%"):
            tok = self.tok
            if tok.text != "*":
                raise self.unsupported(f"operator {tok.text!r} is not supported")
            self.i += 1
            right = self.unary()
            if not (_is_constant(node) or _is_constant(right)):
                raise self.unsupported("product of two variables is not affine", tok)
            node = BinOp("*", node, right)
        return node

    def unary(self):
        tok = self.tok
        if tok.kind == "op" and tok.text in ("-", "+"):
            self.i += 1
            operand = self.unary()
            return Neg(operand) if tok.text == "-" else operand
        if tok.kind == "num":
            self.i += 1
            return Num(Fraction(tok.text), tok.text)
        if tok.kind == "ident":
            self.ident()
            if self.at("("):
                raise self.unsupported("function calls are not supported", tok)
            if self.at("["):
                raise self.unsupported("arrays are not supported", tok)
            return Var(tok.text, tok.line, tok.col)
        if self.at("("):
            self.i += 1
            node = self.affine()
            self.expect(")")
            return node
        if tok.kind == "op" and tok.text in ("&", "*", "++", "--", "~"):
            raise self.unsupported(f"operator {tok.text!r} is not supported")
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")


def _is_constant(node) -> bool:
    if isinstance(node, Num):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return _is_constant(node.operand)
    return _is_constant(node.left) and _is_constant(node.right)


def parse(text: str, entry: str = "control") -> ControllerIR:
    """Parse controller source into IR; the function must be named ``entry``."""
    ir = _Parser(text).program()
    if entry is not None and ir.name != entry:
        raise ControllerSyntaxError(f"entry function {entry!r} not found (found {ir.name!r})", 1, 1)
    return ir
