"""Cyber trajectories (path-id sequences) and their control-range tubes."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .affine import format_fraction
from .ranges import RangeTable


@dataclass(frozen=True)
class CyberTrajectory:
    """Path ids p_0..p_l over a horizon H (complete when l == H)."""

    path_ids: tuple[int, ...]
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "path_ids", tuple(int(p) for p in self.path_ids))
        if not self.path_ids:
            raise ValueError("a cyber trajectory has at least one step")
        if len(self.path_ids) > self.horizon + 1:
            raise ValueError("trajectory longer than the horizon")

    @property
    def l(self) -> int:
        return len(self.path_ids) - 1

    @property
    def complete(self) -> bool:
        return self.l == self.horizon

    def prefix(self, keep: int) -> CyberTrajectory:
        """Steps 0..keep."""
        return CyberTrajectory(self.path_ids[: keep + 1], self.horizon)

    def is_prefix_of(self, other: CyberTrajectory) -> bool:
        return other.path_ids[: len(self.path_ids)] == self.path_ids

    def __str__(self):
        return "-".join(map(str, self.path_ids))


@dataclass(frozen=True)
class TrajectoryRange:
    """Per-step control intervals of a (possibly truncated) cyber trajectory."""

    trajectory: CyberTrajectory
    steps: tuple[Mapping[str, tuple[Fraction, Fraction]], ...]

    @classmethod
    def of(cls, traj: CyberTrajectory, ranges: RangeTable) -> TrajectoryRange:
        steps = []
        for p in traj.path_ids:
            r = ranges.of(p)
            steps.append({v: r.interval(v) for v in ranges.control_vars})
        return cls(traj, tuple(steps))

    @classmethod
    def envelope(cls, ranges: RangeTable, horizon: int) -> TrajectoryRange:
        """The global control envelope at every step (no path labels)."""
        lo, hi = ranges.global_lo, ranges.global_hi
        step = {v: (lo[v], hi[v]) for v in ranges.control_vars}
        return cls(CyberTrajectory((0,) * (horizon + 1), horizon), tuple(step for _ in range(horizon + 1)))

    @property
    def l(self) -> int:
        return len(self.steps) - 1

    @property
    def controls(self) -> tuple[str, ...]:
        return tuple(self.steps[0])

    def prefix(self, keep: int) -> TrajectoryRange:
        return TrajectoryRange(self.trajectory.prefix(keep), self.steps[: keep + 1])

    def box(self, horizon: int, envelope: Mapping[str, tuple[Fraction, Fraction]]) -> np.ndarray:
        """(H+1, m, 2) float clip box: the tube on its prefix, the envelope after."""
        controls = self.controls
        out = np.empty((horizon + 1, len(controls), 2))
        for t in range(horizon + 1):
            src = self.steps[t] if t < len(self.steps) else envelope
            for j, v in enumerate(controls):
                out[t, j] = (float(src[v][0]), float(src[v][1]))
        return out

    def contains_controls(self, U: Mapping[str, np.ndarray]) -> bool:
        """Whether the control signals stay inside the tube on its prefix."""
        for t, step in enumerate(self.steps):
            for v, (lo, hi) in step.items():
                if not lo <= Fraction(float(U[v][t])) <= hi:
                    return False
        return True

    def covers(self, other: TrajectoryRange) -> bool:
        """Whether every control sequence in ``other`` also lies in this tube."""
        if len(other.steps) < len(self.steps):
            return False
        for a, b in zip(self.steps, other.steps):
            for v, (lo, hi) in a.items():
                if not (lo <= b[v][0] and b[v][1] <= hi):
                    return False
        return True

    def to_dict(self) -> dict:
        return {
            "path_ids": list(self.trajectory.path_ids),
            "steps": [{v: [format_fraction(lo), format_fraction(hi)] for v, (lo, hi) in s.items()} for s in self.steps],
        }
