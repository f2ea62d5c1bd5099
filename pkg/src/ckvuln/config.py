"""JSON run configuration.

Paths inside a config (controller source, spec file) are resolved relative to
the config file. Every default is written back into the materialised config,
which is embedded in reports so a run can be replayed without the original
files.
"""

from __future__ import annotations

import copy
import json
from fractions import Fraction
from pathlib import Path

import jsonschema

from .cegar import Problem
from .controller import extract_paths, parse
from .errors import ConfigError
from .falsifier import Budget, GridSpec
from .plant import AttackSpec, builtin_plant
from .ranges import path_ranges
from .stl import parse_stl

CASES_DIR = Path(__file__).parent / "cases"

_interval = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["controller", "plant", "horizon", "x0_box"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "controller": {
            "type": "object",
            "required": ["inputs"],
            "additionalProperties": False,
            "properties": {
                "source": {"type": "string"},
                "source_text": {"type": "string"},
                "entry": {"type": "string"},
                "inputs": {"type": "object", "additionalProperties": _interval, "minProperties": 1},
                "controls": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            },
        },
        "plant": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
        },
        "spec": {"type": "string"},
        "spec_file": {"type": "string"},
        "horizon": {"type": "integer", "minimum": 1},
        "x0_box": {
            "oneOf": [
                {"type": "array", "items": _interval, "minItems": 1},
                {"type": "object", "additionalProperties": _interval},
            ]
        },
        "budget": {"type": "string", "pattern": r"^\s*\d+\s*[xX*]\s*\d+\s*$"},
        "strategy": {"enum": ["linear", "binary"]},
        "seed": {"type": "integer", "minimum": 0},
        "attack": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["channels"],
            "properties": {
                "channels": {"type": "array", "items": {"type": "string"}},
                "abs": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
                "rel": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
            },
        },
        "caps": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "falsify": {"type": "integer", "minimum": 1},
                "paths": {"type": "integer", "minimum": 1},
            },
        },
        "grid": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {
                "x0_levels": {"type": "integer", "minimum": 1},
                "u_levels": {"type": "integer", "minimum": 1},
                "s_levels": {"type": "integer", "minimum": 1},
            },
        },
        "output_dir": {"type": "string"},
    },
}

DEFAULTS = {
    "budget": "100x5",
    "strategy": "linear",
    "seed": 0,
    "attack": None,
    "caps": {"falsify": 50, "paths": 4096},
    "grid": None,
    "output_dir": "out",
}


def materialise(raw: dict, base_dir: Path | None = None) -> dict:
    """Validate, fill defaults, inline referenced files."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    cfg = copy.deepcopy(raw)
    for key, value in DEFAULTS.items():
        if key == "caps":
            cfg["caps"] = {**value, **cfg.get("caps", {})}
        else:
            cfg.setdefault(key, copy.deepcopy(value))
    base = Path(base_dir) if base_dir else Path.cwd()
    ctl = cfg["controller"]
    ctl.setdefault("entry", "control")
    if "source_text" not in ctl:
        if "source" not in ctl:
            raise ConfigError("controller needs 'source' or 'source_text'")
        path = (base / ctl["source"]).resolve()
        if not path.is_file():
            raise ConfigError(f"controller source not found: {path}")
        ctl["source_text"] = path.read_text(encoding="utf-8")
    if "spec" not in cfg:
        if "spec_file" not in cfg:
            raise ConfigError("config needs 'spec' or 'spec_file'")
        path = (base / cfg["spec_file"]).resolve()
        if not path.is_file():
            raise ConfigError(f"spec file not found: {path}")
        cfg["spec"] = path.read_text(encoding="utf-8").strip()
    cfg["plant"].setdefault("params", {})
    return cfg


def load(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return materialise(raw, path.parent)


def bundled(name: str) -> dict:
    """Materialised config of a bundled case study, e.g. ``drone``."""
    path = CASES_DIR / f"{name}.json"
    if not path.is_file():
        known = sorted(p.stem for p in CASES_DIR.glob("*.json"))
        raise ConfigError(f"unknown case {name!r}; bundled cases: {', '.join(known)}")
    return load(path)


def budget_of(cfg: dict) -> Budget:
    return Budget.parse(cfg["budget"])


def grid_of(cfg: dict) -> GridSpec | None:
    return GridSpec(**cfg["grid"]) if cfg.get("grid") is not None else None


def attack_of(cfg: dict) -> AttackSpec | None:
    a = cfg.get("attack")
    if not a:
        return None
    return AttackSpec(tuple(a["channels"]), dict(a.get("abs", {})), dict(a.get("rel", {})))


def build_table(cfg: dict):
    ctl = cfg["controller"]
    ir = parse(ctl["source_text"], ctl["entry"])
    inputs = ctl["inputs"]
    if set(inputs) != set(ir.params):
        raise ConfigError(f"config declares inputs {sorted(inputs)} but the controller takes {list(ir.params)}")
    box = {v: (Fraction(str(inputs[v][0])), Fraction(str(inputs[v][1]))) for v in ir.params}
    controls = tuple(ctl["controls"]) if ctl.get("controls") else None
    table = extract_paths(ir, box, controls, cap=cfg["caps"]["paths"])
    return ir, table


def build_problem(cfg: dict) -> Problem:
    ir, table = build_table(cfg)
    plant = builtin_plant(cfg["plant"]["name"], cfg["plant"]["params"])
    box = cfg["x0_box"]
    if isinstance(box, dict):
        missing = set(plant.state_names) - set(box)
        if missing:
            raise ConfigError(f"x0_box lacks state(s): {', '.join(sorted(missing))}")
        box = [box[s] for s in plant.state_names]
    if len(box) != plant.n:
        raise ConfigError(f"x0_box has {len(box)} entries, plant has {plant.n} states")
    return Problem(parse_stl(cfg["spec"]), plant, ir, table, path_ranges(table), cfg["horizon"], box, attack_of(cfg))
