"""Controller front end: parsing, symbolic path extraction, concrete execution."""

from .interp import execute, interpret, interpret_batch
from .parser import ControllerIR, parse
from .symexec import (
    PathConstraint,
    PathEntry,
    PathFunction,
    PathTable,
    extract_paths,
    path_of,
    path_of_batch,
)

__all__ = [
    "ControllerIR",
    "PathConstraint",
    "PathEntry",
    "PathFunction",
    "PathTable",
    "execute",
    "extract_paths",
    "interpret",
    "interpret_batch",
    "parse",
    "path_of",
    "path_of_batch",
]
