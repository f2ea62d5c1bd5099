"""Signal temporal logic: syntax, parsing and robustness."""

from .formula import (
    Always,
    And,
    Eventually,
    Not,
    Or,
    Pred,
    Until,
    at_step,
    channels,
    conj,
    depth,
    disj,
    negate,
)
from .parser import parse_stl
from .robustness import robustness, robustness_signal

__all__ = [
    "Always",
    "And",
    "Eventually",
    "Not",
    "Or",
    "Pred",
    "Until",
    "at_step",
    "channels",
    "conj",
    "depth",
    "disj",
    "negate",
    "parse_stl",
    "robustness",
    "robustness_signal",
]
