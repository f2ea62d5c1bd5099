"""Concrete double-precision execution of controller IR.

The batch interpreter evaluates the same IEEE operations elementwise on numpy
arrays, so its results are bit-identical to the scalar interpreter.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..errors import UndefinedVariable
from .parser import BinOp, BoolAnd, BoolNot, BoolOr, Compare, ControllerIR, If, Neg, Num, Var


def eval_expr(expr, env):
    if isinstance(expr, Num):
        return expr.fvalue
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise UndefinedVariable(f"variable {expr.name!r} read before assignment", expr.line, expr.col) from None
    if isinstance(expr, Neg):
        return -eval_expr(expr.operand, env)
    a = eval_expr(expr.left, env)
    b = eval_expr(expr.right, env)
    if expr.op == "+":
        return a + b
    if expr.op == "-":
        return a - b
    return a * b


def eval_cond(cond, env):
    if isinstance(cond, Compare):
        a = eval_expr(cond.lhs, env)
        b = eval_expr(cond.rhs, env)
        if cond.op == "<":
            return a < b
        if cond.op == "<=":
            return a <= b
        if cond.op == ">":
            return a > b
        return a >= b
    if isinstance(cond, BoolNot):
        r = eval_cond(cond.item, env)
        return ~r if isinstance(r, np.ndarray) else not r
    results = [eval_cond(c, env) for c in cond.items]
    if isinstance(results[0], np.ndarray) or any(isinstance(r, np.ndarray) for r in results):
        f = np.logical_and if isinstance(cond, BoolAnd) else np.logical_or
        out = results[0]
        for r in results[1:]:
            out = f(out, r)
        return out
    return all(results) if isinstance(cond, BoolAnd) else any(results)


def _bind(ir: ControllerIR, y) -> dict:
    if isinstance(y, Mapping):
        return {p: y[p] for p in ir.params}
    y = list(y)
    if len(y) != len(ir.params):
        raise ValueError(f"expected {len(ir.params)} inputs, got {len(y)}")
    return dict(zip(ir.params, y))


def execute(ir: ControllerIR, y) -> tuple[dict[str, float], tuple[bool, ...]]:
    """Run the program; return the final environment and branch decisions."""
    env = {k: float(v) for k, v in _bind(ir, y).items()}
    decisions: list[bool] = []

    def run(stmts):
        for s in stmts:
            if isinstance(s, If):
                taken = bool(eval_cond(s.cond, env))
                decisions.append(taken)
                run(s.then if taken else s.orelse)
            else:
                env[s.target] = eval_expr(s.expr, env)

    run(ir.body)
    if ir.returns not in env:
        raise UndefinedVariable(f"returned variable {ir.returns!r} is never assigned")
    return env, tuple(decisions)


def interpret(ir: ControllerIR, y, controls: Sequence[str] | None = None) -> dict[str, float]:
    """Concrete control values for input point ``y``."""
    env, _ = execute(ir, y)
    controls = controls or (ir.returns,)
    out = {}
    for c in controls:
        if c not in env:
            raise UndefinedVariable(f"control variable {c!r} is never assigned")
        out[c] = env[c]
    return out


def interpret_batch(ir: ControllerIR, ys: Mapping[str, np.ndarray], controls: Sequence[str] | None = None) -> dict[str, np.ndarray]:
    """Vectorised :func:`interpret` over arrays of inputs (one array per parameter)."""
    env = {p: np.asarray(ys[p], dtype=float) for p in ir.params}
    shape = np.broadcast(*env.values()).shape if env else ()
    env = {k: np.broadcast_to(v, shape).copy() for k, v in env.items()}
    assigned = {k: np.ones(shape, dtype=bool) for k in env}

    def run(stmts, mask):
        for s in stmts:
            if not mask.any():
                return
            if isinstance(s, If):
                c = np.asarray(eval_cond(s.cond, env), dtype=bool)
                run(s.then, mask & c)
                run(s.orelse, mask & ~c)
            else:
                val = np.broadcast_to(np.asarray(eval_expr(s.expr, env), dtype=float), shape)
                old = env.get(s.target)
                if old is None:
                    env[s.target] = np.where(mask, val, np.nan)
                    assigned[s.target] = mask.copy()
                else:
                    env[s.target] = np.where(mask, val, old)
                    assigned[s.target] = assigned[s.target] | mask

    run(ir.body, np.ones(shape, dtype=bool))
    controls = controls or (ir.returns,)
    out = {}
    for c in controls:
        if c not in env or not assigned[c].all():
            raise UndefinedVariable(f"control variable {c!r} is not assigned on every input")
        out[c] = env[c]
    return out
