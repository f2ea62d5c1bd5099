"""Discrete-time plants, sensor attacks and closed-loop simulation.

Plants are stateless: ``step`` and ``output`` act on the last axis of numpy
arrays, so the same model simulates one trace or a batch of them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .controller import ControllerIR, PathTable, interpret_batch, path_of_batch
from .errors import AttackBoundViolated, ChannelMismatch, ConfigError, NonFiniteState, UnknownPlant
from .trace import Trace

log = logging.getLogger(__name__)


class PlantModel:
    """x' = step(x, u), y = output(x)."""

    name = "plant"
    state_names: tuple[str, ...] = ()
    output_names: tuple[str, ...] = ()
    m = 1
    dt = 0.1

    @property
    def n(self) -> int:
        return len(self.state_names)

    @property
    def o(self) -> int:
        return len(self.output_names)

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def output(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {"dt": self.dt}


class IntegratorChain(PlantModel):
    """x_i' = x_i + dt*x_{i+1}, x_n' = x_n + dt*u (forward Euler)."""

    name = "integrator_chain"

    def __init__(self, n: int = 1, dt: float = 0.1, observe: str = "first", names: Sequence[str] | None = None):
        if n < 1:
            raise ConfigError("integrator chain needs n >= 1")
        if observe not in ("first", "all"):
            raise ConfigError("observe must be 'first' or 'all'")
        self.dt = float(dt)
        self.observe = observe
        self.state_names = tuple(names) if names else tuple(f"x{i + 1}" for i in range(n))
        if len(self.state_names) != n:
            raise ConfigError(f"expected {n} state names")
        self.output_names = self.state_names if observe == "all" else self.state_names[:1]

    def step(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        nxt = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (x.shape[-1],)))
        nxt[..., :-1] = x[..., :-1] + self.dt * x[..., 1:]
        nxt[..., -1] = x[..., -1] + self.dt * u[..., 0]
        return nxt

    def output(self, x):
        x = np.asarray(x, dtype=float)
        return x.copy() if self.observe == "all" else x[..., :1].copy()

    def params(self):
        return {"n": self.n, "dt": self.dt, "observe": self.observe}


class DoubleIntegrator(IntegratorChain):
    """Position/velocity double integrator observing position."""

    name = "double_integrator"

    def __init__(self, dt: float = 0.1):
        super().__init__(2, dt, "first", ("pos", "vel"))

    def params(self):
        return {"dt": self.dt}


class EngineSurrogate(PlantModel):
    """First-order engine/vehicle stand-in driven by a throttle command.

    RPM' = RPM + dt*(a*Throttle - b*RPM); Speed' = Speed + dt*(c*RPM - d*Speed).
    Both states are measured.
    """

    name = "engine_surrogate"
    state_names = ("RPM", "Speed")
    output_names = ("RPM", "Speed")

    def __init__(self, a: float = 20.0, b: float = 0.5, c: float = 0.012, d: float = 0.5, dt: float = 0.1):
        self.a, self.b, self.c, self.d, self.dt = float(a), float(b), float(c), float(d), float(dt)

    def step(self, x, u):
        x = np.asarray(x, dtype=float)
        th = np.asarray(u, dtype=float)[..., 0]
        rpm, speed = x[..., 0], x[..., 1]
        return np.stack(
            [rpm + self.dt * (self.a * th - self.b * rpm), speed + self.dt * (self.c * rpm - self.d * speed)],
            axis=-1,
        )

    def output(self, x):
        return np.asarray(x, dtype=float).copy()

    def params(self):
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d, "dt": self.dt}


PLANTS: dict[str, Callable[..., PlantModel]] = {
    "integrator_chain": IntegratorChain,
    "double_integrator": DoubleIntegrator,
    "engine_surrogate": EngineSurrogate,
}


def builtin_plant(name: str, params: Mapping | None = None) -> PlantModel:
    try:
        factory = PLANTS[name]
    except KeyError:
        raise UnknownPlant(f"unknown plant {name!r}; known: {', '.join(sorted(PLANTS))}") from None
    try:
        return factory(**dict(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for plant {name!r}: {exc}") from None


# -- attacks ---------------------------------------------------------------------


@dataclass(frozen=True)
class AttackSpec:
    """Per-channel bound |s_t| <= abs + rel*|y_t| on the enabled output channels."""

    channels: tuple[str, ...]
    abs_bound: Mapping[str, float] = field(default_factory=dict)
    rel_bound: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        for b in (*self.abs_bound.values(), *self.rel_bound.values()):
            if not b >= 0:
                raise ConfigError("attack bounds must be nonnegative")

    def bound(self, outputs: Sequence[str], y: np.ndarray) -> np.ndarray:
        """Bound array shaped like ``y`` (last axis ordered as ``outputs``)."""
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        for j, name in enumerate(outputs):
            if name in self.channels:
                out[..., j] = self.abs_bound.get(name, 0.0) + self.rel_bound.get(name, 0.0) * np.abs(y[..., j])
        return out

    def to_dict(self) -> dict:
        return {"channels": list(self.channels), "abs": dict(self.abs_bound), "rel": dict(self.rel_bound)}


def attack_channel(output: str) -> str:
    return f"s_{output}"


# -- closed loop -----------------------------------------------------------------


@dataclass(frozen=True)
class ClosedLoop:
    """Plant output i feeds controller parameter i; controls feed the plant input."""

    plant: PlantModel
    ir: ControllerIR
    table: PathTable
    attack: AttackSpec | None = None

    def __post_init__(self):
        if len(self.ir.params) != self.plant.o:
            raise ChannelMismatch(
                f"controller takes {len(self.ir.params)} inputs but the plant has {self.plant.o} outputs"
            )
        if len(self.table.control_vars) != self.plant.m:
            raise ChannelMismatch(
                f"controller produces {len(self.table.control_vars)} controls but the plant takes {self.plant.m}"
            )
        if self.attack:
            unknown = set(self.attack.channels) - set(self.plant.output_names)
            if unknown:
                raise ChannelMismatch(f"attack on unknown output channel(s): {', '.join(sorted(unknown))}")

    @property
    def controls(self) -> tuple[str, ...]:
        return self.table.control_vars


@dataclass
class Rollout:
    """Batched simulation result; arrays are (batch, H+1, dim)."""

    X: np.ndarray
    Y: np.ndarray
    U: np.ndarray
    S: np.ndarray | None = None
    P: np.ndarray | None = None
    finite: np.ndarray | None = None

    def channels(self, plant: PlantModel, controls: Sequence[str]) -> dict[str, np.ndarray]:
        """Channel name -> (batch, H+1) arrays, as consumed by the STL monitor."""
        ch = {name: self.X[..., i] for i, name in enumerate(plant.state_names)}
        for j, name in enumerate(plant.output_names):
            ch.setdefault(name, self.Y[..., j])
        for j, name in enumerate(controls):
            ch[name] = self.U[..., j]
        if self.S is not None:
            for j, name in enumerate(plant.output_names):
                ch[attack_channel(name)] = self.S[..., j]
        return ch

    def trace(self, b: int, plant: PlantModel, controls: Sequence[str]) -> Trace:
        ch = {k: np.array(v[b]) for k, v in self.channels(plant, controls).items()}
        attacks = tuple(attack_channel(o) for o in plant.output_names) if self.S is not None else ()
        paths = tuple(int(p) for p in self.P[b]) if self.P is not None else None
        return Trace(ch, plant.dt, plant.state_names, plant.output_names, tuple(controls), attacks, paths)


def rollout_open(plant: PlantModel, x0: np.ndarray, U: np.ndarray) -> Rollout:
    """Drive the plant with controls U (batch, H+1, m); U[:, H] is only a pad."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    U = np.asarray(U, dtype=float)
    B, T = U.shape[0], U.shape[1]
    X = np.empty((B, T, plant.n))
    X[:, 0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T - 1):
            X[:, t + 1] = plant.step(X[:, t], U[:, t])
        Y = plant.output(X)
    finite = np.isfinite(X).all(axis=(1, 2))
    return Rollout(X, Y, U, finite=finite)


def rollout_closed(cl: ClosedLoop, x0: np.ndarray, H: int, S: np.ndarray | None = None, normalized: bool = False) -> Rollout:
    """Closed-loop rollout of a batch of initial states.

    ``S`` (batch, H+1, o) is added to the true outputs before the controller
    sees them. With ``normalized=True`` it holds values in [-1, 1] that are
    scaled by the attack bound at each step.
    """
    plant = cl.plant
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    B = x0.shape[0]
    X = np.empty((B, H + 1, plant.n))
    Y = np.empty((B, H + 1, plant.o))
    U = np.empty((B, H + 1, plant.m))
    P = np.zeros((B, H + 1), dtype=np.int64)
    Sout = np.zeros((B, H + 1, plant.o)) if S is not None else None
    finite = np.ones(B, dtype=bool)
    X[:, 0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(H + 1):
            y = plant.output(X[:, t])
            Y[:, t] = y
            meas = y
            if S is not None:
                s = np.asarray(S[:, t], dtype=float)
                if normalized:
                    s = np.clip(s, -1.0, 1.0) * cl.attack.bound(plant.output_names, y)
                Sout[:, t] = s
                meas = y + s
            ok = np.isfinite(meas).all(axis=-1)
            finite &= ok & np.isfinite(X[:, t]).all(axis=-1)
            safe = np.where(ok[:, None], meas, 0.0)
            inputs = {p: safe[:, i] for i, p in enumerate(cl.ir.params)}
            u = interpret_batch(cl.ir, inputs, cl.controls)
            U[:, t] = np.stack([u[c] for c in cl.controls], axis=-1)
            P[:, t] = np.where(ok, path_of_batch(cl.table, inputs, strict=False), 0)
            if t < H:
                X[:, t + 1] = plant.step(X[:, t], U[:, t])
    finite &= np.isfinite(U).all(axis=(1, 2))
    return Rollout(X, Y, U, Sout, P, finite)


def _pad_controls(u_seq, H: int | None, m: int) -> np.ndarray:
    u = np.asarray(u_seq, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.shape[1] != m:
        raise ChannelMismatch(f"expected {m} control channel(s), got {u.shape[1]}")
    if H is None:
        H = len(u)
    if len(u) == H:
        u = np.concatenate([u, u[-1:]], axis=0)
    elif len(u) != H + 1:
        raise ValueError(f"control sequence must have H={H} or H+1 samples, got {len(u)}")
    return u


def simulate_open(plant: PlantModel, x0, u_seq, controls: Sequence[str] | None = None, H: int | None = None) -> Trace:
    """Open-loop trace; a length-H control sequence is padded by repeating its last value."""
    U = _pad_controls(u_seq, H, plant.m)
    controls = tuple(controls) if controls else (("u",) if plant.m == 1 else tuple(f"u{j + 1}" for j in range(plant.m)))
    r = rollout_open(plant, np.asarray(x0, dtype=float).reshape(1, -1), U[None])
    if not r.finite[0]:
        raise NonFiniteState("state became non-finite during open-loop simulation")
    return r.trace(0, plant, controls)


def simulate_closed(cl: ClosedLoop, x0, H: int, s_seq=None) -> Trace:
    """Closed-loop trace with the realised path sequence; ``s_seq`` is (H+1, o)."""
    S = None
    if s_seq is not None:
        S = np.asarray(s_seq, dtype=float).reshape(H + 1, cl.plant.o)
        if cl.attack is None:
            if np.any(S != 0):
                raise AttackBoundViolated("nonzero attack signal but no attack is configured")
        S = S[None]
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    if x0.shape[1] != cl.plant.n:
        raise ChannelMismatch(f"expected {cl.plant.n} initial states, got {x0.shape[1]}")
    r = rollout_closed(cl, x0, H, S)
    if not r.finite[0]:
        raise NonFiniteState("state became non-finite during closed-loop simulation")
    if S is not None and cl.attack is not None:
        bound = cl.attack.bound(cl.plant.output_names, r.Y[0])
        if np.any(np.abs(S[0]) > bound):
            raise AttackBoundViolated("attack signal exceeds its bound")
    if np.any(r.P[0] == 0):
        log.warning("controller input left the analysed box; path recorded as 0")
    return r.trace(0, cl.plant, cl.controls)
