"""Independent reference implementations used as test oracles.

These are deliberately naive: plain Python loops over lists, written from the
textbook recursive definitions and sharing no code with the package monitor
beyond the AST classes.
"""

from __future__ import annotations

import math

from ckvuln.stl import Always, And, Eventually, Not, Or, Pred, Until


def _expr_value(p: Pred, sig: dict, t: int) -> float:
    value = float(p.expr.constant)
    for name, coef in p.expr.terms:
        value += float(coef) * float(sig[name][t])
    return value


def _pred_margin(p: Pred, sig: dict, t: int) -> float:
    # margin > 0 iff ``expr op 0`` holds
    value = _expr_value(p, sig, t)
    return -value if p.op in ("<", "<=") else value


def _window(f_lo, f_hi, t, T):
    hi = T - 1 if f_hi is None else min(t + f_hi, T - 1)
    return range(t + f_lo, hi + 1)


def rob(f, sig: dict, t: int = 0) -> float:
    T = len(next(iter(sig.values())))
    if isinstance(f, Pred):
        return _pred_margin(f, sig, t)
    if isinstance(f, Not):
        return -rob(f.child, sig, t)
    if isinstance(f, And):
        return min((rob(c, sig, t) for c in f.children), default=math.inf)
    if isinstance(f, Or):
        return max((rob(c, sig, t) for c in f.children), default=-math.inf)
    if isinstance(f, Always):
        return min((rob(f.child, sig, s) for s in _window(f.lo, f.hi, t, T)), default=math.inf)
    if isinstance(f, Eventually):
        return max((rob(f.child, sig, s) for s in _window(f.lo, f.hi, t, T)), default=-math.inf)
    if isinstance(f, Until):
        best = -math.inf
        for tp in _window(f.lo, f.hi, t, T):
            held = min((rob(f.left, sig, s) for s in range(t, tp)), default=math.inf)
            best = max(best, min(rob(f.right, sig, tp), held))
        return best
    raise TypeError(f)


def sat(f, sig: dict, t: int = 0) -> bool:
    """Boolean semantics (strict predicates evaluated as written)."""
    T = len(next(iter(sig.values())))
    if isinstance(f, Pred):
        value = _expr_value(f, sig, t)
        return {"<": value < 0, "<=": value <= 0, ">": value > 0, ">=": value >= 0}[f.op]
    if isinstance(f, Not):
        return not sat(f.child, sig, t)
    if isinstance(f, And):
        return all(sat(c, sig, t) for c in f.children)
    if isinstance(f, Or):
        return any(sat(c, sig, t) for c in f.children)
    if isinstance(f, Always):
        return all(sat(f.child, sig, s) for s in _window(f.lo, f.hi, t, T))
    if isinstance(f, Eventually):
        return any(sat(f.child, sig, s) for s in _window(f.lo, f.hi, t, T))
    if isinstance(f, Until):
        return any(
            sat(f.right, sig, tp) and all(sat(f.left, sig, s) for s in range(t, tp))
            for tp in _window(f.lo, f.hi, t, T)
        )
    raise TypeError(f)


def simulate_chain(x0, us, dt):
    """Forward-Euler integrator chain by hand: x_i += dt*x_{i+1}, x_n += dt*u."""
    xs = [list(map(float, x0))]
    for u in us:
        x = xs[-1]
        n = len(x)
        nxt = [x[i] + dt * (x[i + 1] if i + 1 < n else u) for i in range(n)]
        xs.append(nxt)
    return xs


def random_formula(rng, depth: int, names=("a", "b")):
    """Random formula of nesting depth at most ``depth`` with small intervals."""
    from fractions import Fraction

    from ckvuln.affine import AffineExpr

    if depth == 0 or rng.random() < 0.25:
        expr = AffineExpr.const(Fraction(int(rng.integers(-20, 21)), 10))
        for n in names:
            c = int(rng.integers(-2, 3))
            if c:
                expr = expr + AffineExpr.var(n).scale(c)
        if expr.is_constant:
            expr = expr + AffineExpr.var(names[0])
        return Pred(expr, ["<", "<=", ">", ">="][int(rng.integers(4))])
    kind = int(rng.integers(7))
    sub = lambda: random_formula(rng, depth - 1, names)  # noqa: E731
    lo = int(rng.integers(0, 4))
    hi = None if rng.random() < 0.15 else lo + int(rng.integers(0, 4))
    if kind == 0:
        return Not(sub())
    if kind == 1:
        return And(tuple(sub() for _ in range(int(rng.integers(1, 4)))))
    if kind == 2:
        return Or(tuple(sub() for _ in range(int(rng.integers(1, 4)))))
    if kind == 3:
        return Always(lo, hi, sub())
    if kind == 4:
        return Eventually(lo, hi, sub())
    return Until(lo, hi, sub(), sub())
