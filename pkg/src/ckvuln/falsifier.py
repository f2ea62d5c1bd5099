"""Search for traces that violate an STL formula.

The decision vector is ``x0 ++ u_0..u_H ++ s_0..s_H``; the control part
exists only for open-loop models and the attack part only when an attack is
configured (normalised to [-1, 1] and scaled by the bound at run time).

Two drivers share the same evaluation path: simulated annealing with
independent restarts, and an exhaustive lattice enumeration ("grid mode")
used as a complete oracle on small instances.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .controller import PathTable, path_of
from .errors import ChannelMismatch, ConfigError
from .plant import AttackSpec, ClosedLoop, PlantModel, Rollout, rollout_closed, rollout_open
from .ranges import RangeTable
from .stl import channels as formula_channels
from .stl import robustness
from .trace import Trace
from .trajectory import CyberTrajectory

log = logging.getLogger(__name__)

MISMATCH_PENALTY = 1e3
T0 = 1.0
COOLING = 0.97
STEP_FRACTION = 0.1


@dataclass(frozen=True)
class Budget:
    iters_per_run: int
    n_runs: int

    def __post_init__(self):
        if self.iters_per_run < 1 or self.n_runs < 1:
            raise ConfigError("budget values must be >= 1")

    @classmethod
    def parse(cls, text: str) -> Budget:
        m = re.fullmatch(r"\s*(\d+)\s*[xX*]\s*(\d+)\s*", str(text))
        if not m:
            raise ConfigError(f"budget must look like ITERSxRUNS, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self):
        return f"{self.iters_per_run}x{self.n_runs}"


@dataclass(frozen=True)
class GridSpec:
    """Lattice resolution per decision group; degenerate coordinates get one level."""

    x0_levels: int = 3
    u_levels: int = 2
    s_levels: int = 3
    max_points: int = 5_000_000

    def to_dict(self) -> dict:
        return {"x0_levels": self.x0_levels, "u_levels": self.u_levels, "s_levels": self.s_levels}


@dataclass
class SearchSpace:
    H: int
    x0_box: np.ndarray
    u_box: np.ndarray | None = None
    s_box: np.ndarray | None = None

    def __post_init__(self):
        self.x0_box = np.asarray(self.x0_box, dtype=float).reshape(-1, 2)
        if self.u_box is not None:
            self.u_box = np.asarray(self.u_box, dtype=float)
            if self.u_box.shape[0] != self.H + 1:
                raise ConfigError(f"control box needs H+1={self.H + 1} steps")
        if self.s_box is not None:
            self.s_box = np.asarray(self.s_box, dtype=float)
        for box in (self.x0_box, self.u_box, self.s_box):
            if box is not None and (not np.isfinite(box).all() or np.any(box[..., 0] > box[..., 1])):
                raise ConfigError("search boxes must be finite with lo <= hi")

    @classmethod
    def build(cls, H, x0_box, u_box=None, attack: AttackSpec | None = None, outputs: Sequence[str] = ()):
        s_box = None
        if attack is not None:
            s_box = np.zeros((H + 1, len(outputs), 2))
            for j, name in enumerate(outputs):
                if name in attack.channels:
                    s_box[:, j] = (-1.0, 1.0)
        return cls(H, x0_box, u_box, s_box)

    @property
    def n(self) -> int:
        return len(self.x0_box)

    def groups(self) -> list[tuple[str, np.ndarray]]:
        out = [("x0", self.x0_box)]
        if self.u_box is not None:
            out.append(("u", self.u_box.reshape(-1, 2)))
        if self.s_box is not None:
            out.append(("s", self.s_box.reshape(-1, 2)))
        return out

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        box = np.concatenate([b for _, b in self.groups()])
        return box[:, 0], box[:, 1]

    def split(self, Z: np.ndarray):
        Z = np.atleast_2d(Z)
        B = Z.shape[0]
        i = self.n
        x0 = Z[:, :i]
        U = S = None
        if self.u_box is not None:
            size = self.u_box.shape[0] * self.u_box.shape[1]
            U = Z[:, i:i + size].reshape(B, *self.u_box.shape[:2])
            i += size
        if self.s_box is not None:
            size = self.s_box.shape[0] * self.s_box.shape[1]
            S = Z[:, i:i + size].reshape(B, *self.s_box.shape[:2])
        return x0, U, S


# -- models ----------------------------------------------------------------------


class OpenLoopModel:
    """Plant driven by free controls (abstract falsification)."""

    kind = "open"

    def __init__(self, plant: PlantModel, controls: Sequence[str] = ("u",), attack: AttackSpec | None = None):
        if len(controls) != plant.m:
            raise ChannelMismatch(f"plant takes {plant.m} controls, got names {list(controls)}")
        self.plant = plant
        self.controls = tuple(controls)
        self.attack = attack

    def simulate(self, space: SearchSpace, Z: np.ndarray) -> Rollout:
        x0, U, S = space.split(Z)
        if U is None:
            raise ConfigError("open-loop search needs a control box")
        r = rollout_open(self.plant, x0, U)
        if S is not None:
            bound = self.attack.bound(self.plant.output_names, r.Y) if self.attack else 0.0
            with np.errstate(invalid="ignore"):
                r.S = np.clip(S, -1.0, 1.0) * bound
        return r

    def penalty(self, r: Rollout) -> np.ndarray:
        return np.zeros(len(r.X))

    def channel_names(self, space: SearchSpace) -> set[str]:
        names = set(self.plant.state_names) | set(self.plant.output_names) | set(self.controls)
        if space.s_box is not None:
            names |= {f"s_{o}" for o in self.plant.output_names}
        return names


class ClosedLoopModel:
    """True closed loop; optionally penalise departures from a target path prefix."""

    kind = "closed"

    def __init__(self, cl: ClosedLoop, target: Sequence[int] | None = None):
        self.cl = cl
        self.plant = cl.plant
        self.controls = cl.controls
        self.target = tuple(target) if target is not None else None

    def simulate(self, space: SearchSpace, Z: np.ndarray) -> Rollout:
        x0, _, S = space.split(Z)
        return rollout_closed(self.cl, x0, space.H, S, normalized=True)

    def penalty(self, r: Rollout) -> np.ndarray:
        if self.target is None:
            return np.zeros(len(r.X))
        tgt = np.asarray(self.target)
        miss = (r.P[:, : len(tgt)] != tgt).sum(axis=1)
        return MISMATCH_PENALTY * miss

    def channel_names(self, space: SearchSpace) -> set[str]:
        names = set(self.plant.state_names) | set(self.plant.output_names) | set(self.controls)
        if space.s_box is not None:
            names |= {f"s_{o}" for o in self.plant.output_names}
        return names


@dataclass
class Evaluation:
    objective: np.ndarray
    robustness: np.ndarray
    penalty: np.ndarray
    found: np.ndarray
    rollout: Rollout


def evaluate(model, phi, space: SearchSpace, Z: np.ndarray) -> Evaluation:
    r = model.simulate(space, Z)
    with np.errstate(invalid="ignore", over="ignore"):
        rob = np.asarray(robustness(phi, r.channels(model.plant, model.controls)), dtype=float).reshape(-1)
    pen = model.penalty(r)
    bad = ~r.finite | np.isnan(rob)
    rob = np.where(bad, np.inf, rob)
    obj = rob + pen
    found = (rob < 0) & (pen == 0) & ~bad
    return Evaluation(obj, rob, pen, found, r)


# -- results ---------------------------------------------------------------------


@dataclass
class FalsifyResult:
    found: bool
    robustness: float
    objective: float
    trace: Trace | None
    decision: np.ndarray | None
    seed: int
    run: int
    evaluations: int
    mode: str = "anneal"
    budget: Budget | None = None
    grid: GridSpec | None = None
    incidental: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {
            "found": self.found,
            "robustness": self.robustness,
            "seed": self.seed,
            "mode": self.mode,
            "evaluations": self.evaluations,
        }
        if self.budget is not None:
            out["budget"] = str(self.budget)
        if self.grid is not None:
            out["grid"] = self.grid.to_dict()
        return out


class _Incidental:
    """First violating closed-loop trace seen for each realised path sequence."""

    def __init__(self, model):
        self.model = model
        self.enabled = getattr(model, "kind", "") == "closed"
        self.seen: dict[tuple[int, ...], Trace] = {}

    def add(self, ev: Evaluation):
        if not self.enabled or ev.rollout.P is None:
            return
        hits = np.flatnonzero(ev.robustness < 0)
        for b in hits:
            key = tuple(int(p) for p in ev.rollout.P[b])
            if key not in self.seen and 0 not in key:
                self.seen[key] = ev.rollout.trace(b, self.model.plant, self.model.controls)


def _check_channels(model, phi, space):
    missing = formula_channels(phi) - model.channel_names(space)
    if missing:
        raise ChannelMismatch(f"formula uses channel(s) the model does not produce: {', '.join(sorted(missing))}")


def _result(model, space, ev: Evaluation, Z, b, **kw) -> FalsifyResult:
    tr = ev.rollout.trace(b, model.plant, model.controls) if np.isfinite(ev.objective[b]) else None
    return FalsifyResult(
        found=bool(ev.found[b]),
        robustness=float(ev.robustness[b]),
        objective=float(ev.objective[b]),
        trace=tr,
        decision=np.array(Z[b]),
        **kw,
    )


def falsify(model, phi, space: SearchSpace, budget: Budget | None = None, seed: int = 0, grid: GridSpec | None = None) -> FalsifyResult:
    """Minimise the robustness of ``phi`` over the search space.

    Restarts run in lockstep, each with its own generator seeded by
    (seed, run index). The search stops at the first iteration in which some
    restart reaches negative robustness; ties go to the lowest robustness,
    then the lowest run index.
    """
    _check_channels(model, phi, space)
    inc = _Incidental(model)
    if grid is not None:
        res = _grid_search(model, phi, space, grid, seed, inc)
    else:
        res = _anneal(model, phi, space, budget, seed, inc)
    res.incidental = inc.seen
    return res


def _anneal(model, phi, space, budget, seed, inc) -> FalsifyResult:
    budget = budget or Budget(100, 5)
    lo, hi = space.bounds()
    width = hi - lo
    movable = np.flatnonzero(width > 0)
    R, D = budget.n_runs, len(lo)
    rngs = [np.random.default_rng([seed, r]) for r in range(R)]
    Z = np.stack([lo + width * g.random(D) for g in rngs]) if D else np.zeros((R, 0))
    ev = evaluate(model, phi, space, Z)
    inc.add(ev)
    evals = R
    cur_obj = ev.objective.copy()
    best_obj = ev.objective.copy()
    best_Z = Z.copy()
    best_ev = [(ev, r) for r in range(R)]

    def pick_found(ev_, Z_):
        hits = np.flatnonzero(ev_.found)
        idx = int(hits[np.lexsort((hits, ev_.robustness[hits]))[0]])
        return _result(model, space, ev_, Z_, idx, seed=seed, run=idx, evaluations=evals, budget=budget)

    if ev.found.any():
        return pick_found(ev, Z)
    T = T0
    for _ in range(1, budget.iters_per_run):
        T *= COOLING
        if len(movable) == 0:
            break
        prop = Z.copy()
        for r, g in enumerate(rngs):
            j = movable[g.integers(len(movable))]
            prop[r, j] = np.clip(prop[r, j] + g.normal(0.0, STEP_FRACTION * width[j]), lo[j], hi[j])
        ev = evaluate(model, phi, space, prop)
        inc.add(ev)
        evals += R
        if ev.found.any():
            return pick_found(ev, prop)
        for r, g in enumerate(rngs):
            new, old = ev.objective[r], cur_obj[r]
            draw = g.random()
            if new <= old or (math.isfinite(new) and (not math.isfinite(old) or draw < math.exp(-(new - old) / T))):
                Z[r] = prop[r]
                cur_obj[r] = new
            if new < best_obj[r]:
                best_obj[r] = new
                best_Z[r] = prop[r]
                best_ev[r] = (ev, r)
    r = int(np.lexsort((np.arange(R), best_obj))[0])
    ev_r, idx = best_ev[r]
    return _result(model, space, ev_r, best_Z, idx, seed=seed, run=r, evaluations=evals, budget=budget)


def grid_points(space: SearchSpace, grid: GridSpec) -> list[np.ndarray]:
    """Per-coordinate lattice levels in decision-vector order."""
    levels = []
    per_group = {"x0": grid.x0_levels, "u": grid.u_levels, "s": grid.s_levels}
    for name, box in space.groups():
        for lo, hi in box:
            levels.append(np.array([lo]) if lo == hi else np.linspace(lo, hi, per_group[name]))
    return levels


def _grid_search(model, phi, space: SearchSpace, grid: GridSpec, seed: int, inc, chunk: int = 1 << 15) -> FalsifyResult:
    levels = grid_points(space, grid)
    shape = tuple(len(lv) for lv in levels)
    total = int(np.prod(shape, dtype=object)) if shape else 1
    if total > grid.max_points:
        raise ConfigError(f"grid has {total} points, above the limit of {grid.max_points}")
    best = None
    evals = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.unravel_index(idx, shape) if shape else ()
        Z = np.stack([lv[d] for lv, d in zip(levels, digits)], axis=1) if shape else np.zeros((len(idx), 0))
        ev = evaluate(model, phi, space, Z)
        inc.add(ev)
        evals += len(idx)
        hits = np.flatnonzero(ev.found)
        if len(hits):
            return _result(model, space, ev, Z, hits[0], seed=seed, run=0, evaluations=evals, mode="grid", grid=grid)
        b = int(np.argmin(ev.objective))
        if best is None or ev.objective[b] < best[0]:
            best = (ev.objective[b], ev, Z, b)
    _, ev, Z, b = best
    return _result(model, space, ev, Z, b, seed=seed, run=0, evaluations=evals, mode="grid", grid=grid)


# -- path extraction ---------------------------------------------------------------


def extract_path_sequence(trace: Trace, table: PathTable, ranges: RangeTable | None = None) -> CyberTrajectory:
    """Path ids of the (attacked) measurements y_t + s_t along a trace."""
    outputs = trace.outputs
    if len(outputs) != len(table.input_vars):
        raise ChannelMismatch(f"trace has {len(outputs)} outputs, controller takes {len(table.input_vars)} inputs")
    ids = []
    for t in range(trace.H + 1):
        point = {}
        for name, var in zip(outputs, table.input_vars):
            y = float(trace[name][t])
            s_name = f"s_{name}"
            if s_name in trace.channels:
                y = y + float(trace[s_name][t])
            point[var] = y
        if not table.in_box(point):
            log.warning("step %d: measurement %s outside the controller box, clamped", t, point)
            point = table.clamp(point)
        p = path_of(table, point)
        ids.append(p)
        if ranges is not None and trace.controls:
            u = {c: float(trace[c][t]) for c in trace.controls if c in ranges.control_vars}
            if u and not ranges.of(p).contains(u):
                log.info("step %d: control %s outside the range of path %d", t, u, p)
    return CyberTrajectory(tuple(ids), trace.H)
