"""Uniformly sampled multi-channel traces and their CSV/JSON forms."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Trace:
    """Channels of length H+1 sampled every ``dt`` seconds.

    ``states``, ``outputs``, ``controls`` and ``attacks`` name the channels
    playing each role; an output that is also a state shares its channel.
    """

    channels: dict[str, np.ndarray]
    dt: float
    states: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    controls: tuple[str, ...] = ()
    attacks: tuple[str, ...] = ()
    paths: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise ValueError("all channels must have the same length")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}

    @property
    def H(self) -> int:
        return len(next(iter(self.channels.values()))) - 1

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def column_order(self) -> list[str]:
        seen, out = set(), []
        for name in (*self.states, *self.outputs, *self.controls, *self.attacks, *self.channels):
            if name not in seen:
                seen.add(name)
                out.append(name)
        return out

    def identical(self, other: Trace) -> bool:
        """Bit-identical channels and path sequence."""
        if set(self.channels) != set(other.channels) or self.paths != other.paths:
            return False
        return all(np.array_equal(self.channels[k], other.channels[k]) for k in self.channels)

    # -- serialisation ---------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        header = {
            "dt": repr(float(self.dt)),
            "states": ",".join(self.states),
            "outputs": ",".join(self.outputs),
            "controls": ",".join(self.controls),
            "attacks": ",".join(self.attacks),
        }
        buf.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        cols = self.column_order()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *cols] + (["path"] if self.paths is not None else []))
        for t in range(self.H + 1):
            row = [t] + [repr(float(self.channels[c][t])) for c in cols]
            if self.paths is not None:
                row.append(self.paths[t])
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> Trace:
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ValueError("missing trace metadata line")
        meta = dict(item.split("=", 1) for item in lines[0][2:].split(" ") if item)
        rows = list(csv.reader(lines[1:]))
        head, body = rows[0], rows[1:]
        if head[0] != "t":
            raise ValueError("first column must be t")
        has_path = head[-1] == "path"
        cols = head[1:-1] if has_path else head[1:]
        data = {c: np.array([float(r[i + 1]) for r in body]) for i, c in enumerate(cols)}
        paths = tuple(int(r[-1]) for r in body) if has_path else None

        def names(key):
            return tuple(n for n in meta.get(key, "").split(",") if n)

        return cls(data, float(meta["dt"]), names("states"), names("outputs"), names("controls"), names("attacks"), paths)

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "H": self.H,
            "states": list(self.states),
            "outputs": list(self.outputs),
            "controls": list(self.controls),
            "attacks": list(self.attacks),
            "paths": list(self.paths) if self.paths is not None else None,
            "channels": {k: [float(v) for v in self.channels[k]] for k in self.column_order()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
