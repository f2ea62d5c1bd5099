"""Discrete-time space robustness.

Signals are numpy arrays whose last axis is time; leading axes are batch
dimensions, so one call evaluates many traces. Windows are clipped at the end
of the trace: an empty window gives +inf under G and -inf under F and U.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..errors import UnknownChannel
from .formula import Always, And, Eventually, Not, Or, Pred, Until, channels


def _shift(sig: np.ndarray, k: int, fill: float) -> np.ndarray:
    """out[..., t] = sig[..., t + k], padded with ``fill`` past the end."""
    T = sig.shape[-1]
    out = np.full(sig.shape, fill)
    if k < T:
        out[..., : T - k] = sig[..., k:]
    return out


def _window(sig, lo, hi, reduce, fill):
    T = sig.shape[-1]
    hi = T - 1 if hi is None else min(hi, T - 1)
    out = np.full(sig.shape, fill)
    for k in range(lo, hi + 1):
        out = reduce(out, _shift(sig, k, fill))
    return out


def _signal(f, ch: Mapping[str, np.ndarray], shape) -> np.ndarray:
    if isinstance(f, Pred):
        val = np.broadcast_to(f.expr.evaluate_float(ch), shape)
        return -val if f.op in ("<", "<=") else np.array(val, dtype=float)
    if isinstance(f, Not):
        return -_signal(f.child, ch, shape)
    if isinstance(f, And):
        if not f.children:
            return np.full(shape, np.inf)
        out = _signal(f.children[0], ch, shape)
        for c in f.children[1:]:
            out = np.minimum(out, _signal(c, ch, shape))
        return out
    if isinstance(f, Or):
        if not f.children:
            return np.full(shape, -np.inf)
        out = _signal(f.children[0], ch, shape)
        for c in f.children[1:]:
            out = np.maximum(out, _signal(c, ch, shape))
        return out
    if isinstance(f, Always):
        return _window(_signal(f.child, ch, shape), f.lo, f.hi, np.minimum, np.inf)
    if isinstance(f, Eventually):
        return _window(_signal(f.child, ch, shape), f.lo, f.hi, np.maximum, -np.inf)
    if isinstance(f, Until):
        phi = _signal(f.left, ch, shape)
        psi = _signal(f.right, ch, shape)
        T = shape[-1]
        hi = T - 1 if f.hi is None else min(f.hi, T - 1)
        held = np.full(shape, np.inf)  # min of phi over [t, t + k)
        out = np.full(shape, -np.inf)
        for k in range(0, hi + 1):
            if k >= f.lo:
                out = np.maximum(out, np.minimum(_shift(psi, k, -np.inf), held))
            held = np.minimum(held, _shift(phi, k, np.inf))
        return out
    raise TypeError(f"not a formula: {f!r}")


def _channel_map(trace) -> Mapping[str, np.ndarray]:
    return trace.channels if hasattr(trace, "channels") else trace


def robustness_signal(f, trace) -> np.ndarray:
    """Robustness of ``f`` at every time step (last axis)."""
    ch = _channel_map(trace)
    missing = channels(f) - set(ch)
    if missing:
        raise UnknownChannel(f"formula uses unknown channel(s): {', '.join(sorted(missing))}")
    arrays = {k: np.asarray(ch[k], dtype=float) for k in channels(f)}
    if arrays:
        shape = np.broadcast(*arrays.values()).shape
    else:
        shape = np.asarray(next(iter(ch.values()))).shape
    return _signal(f, arrays, shape)


def robustness(f, trace, t: int = 0):
    """Robustness at step ``t``: a float for one trace, an array for a batch."""
    sig = robustness_signal(f, trace)
    out = sig[..., t]
    return float(out) if out.ndim == 0 else out
