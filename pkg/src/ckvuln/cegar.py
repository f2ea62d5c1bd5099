"""Counterexample-guided enumeration of vulnerable cyber trajectories.

The loop keeps three sets: a FIFO frontier of abstract trajectories still to
refine, the explored tubes (control-range prefixes that are certified under
the falsification budget or already concretised), and the concrete
vulnerabilities with their witness traces.

Every working formula is kept in two forms. ``audit`` is the complete
negated requirement including the interval conjuncts on u. ``residual``
drops the interval conjuncts that the falsifier enforces by clipping its
control variables to ``u_box``. The falsifier minimises the robustness of
the negated residual.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .affine import format_fraction
from .controller import ControllerIR, PathTable
from .falsifier import (
    Budget,
    ClosedLoopModel,
    FalsifyResult,
    GridSpec,
    OpenLoopModel,
    SearchSpace,
    extract_path_sequence,
    falsify,
)
from .plant import AttackSpec, ClosedLoop, PlantModel, attack_channel, simulate_closed
from .ranges import RangeTable
from .stl import And, Or, Pred, at_step, conj, disj, negate, robustness
from .trace import Trace
from .trajectory import CyberTrajectory, TrajectoryRange

log = logging.getLogger(__name__)


# -- encodings -------------------------------------------------------------------


@dataclass(frozen=True)
class Encoding:
    audit: object
    residual: object
    u_box: np.ndarray
    kind: str

    @property
    def objective(self):
        """Formula handed to the falsifier (violated iff the residual holds)."""
        return negate(self.residual)


def _interval_conjuncts(steps: Sequence, upto: int | None = None):
    items = []
    for t, step in enumerate(steps):
        if upto is not None and t > upto:
            break
        for v, (lo, hi) in step.items():
            items.append(at_step(t, Pred.bound(v, ">=", lo)))
            items.append(at_step(t, Pred.bound(v, "<=", hi)))
    return items


def _envelope(ranges: RangeTable) -> dict[str, tuple[Fraction, Fraction]]:
    lo, hi = ranges.global_lo, ranges.global_hi
    return {v: (lo[v], hi[v]) for v in ranges.control_vars}


def build_phi_initial(phi_safety, ranges: RangeTable, H: int) -> Encoding:
    """Negated requirement with every u_t inside the global control envelope."""
    env = _envelope(ranges)
    root = TrajectoryRange.envelope(ranges, H)
    audit = And((negate(phi_safety), *_interval_conjuncts([env] * (H + 1))))
    return Encoding(audit, negate(phi_safety), root.box(H, env), "initial")


def exclusion_formula(tube: TrajectoryRange):
    """Escape the tube at some step of its prefix."""
    escapes = []
    for t, step in enumerate(tube.steps):
        for v, (lo, hi) in step.items():
            escapes.append(at_step(t, Or((Pred.bound(v, "<", lo), Pred.bound(v, ">", hi)))))
    return disj(escapes)


def build_phi_exclusion(phi_safety, explored: Iterable[TrajectoryRange], ranges: RangeTable, H: int) -> Encoding:
    """Negated requirement, global envelope, and an escape from every explored tube."""
    env = _envelope(ranges)
    base = build_phi_initial(phi_safety, ranges, H)
    escapes = [exclusion_formula(tube) for tube in explored]
    residual = conj([negate(phi_safety), *escapes]) if escapes else negate(phi_safety)
    audit = And((base.audit, *escapes))
    return Encoding(audit, residual, TrajectoryRange.envelope(ranges, H).box(H, env), "exclusion")


def build_phi_prefix(phi_safety, tube: TrajectoryRange, keep: int, ranges: RangeTable, H: int) -> Encoding:
    """Negated requirement with u_t in the tube for t <= keep, the envelope afterwards."""
    if not 0 <= keep <= tube.l:
        raise ValueError(f"keep must be in [0, {tube.l}]")
    env = _envelope(ranges)
    steps = [tube.steps[t] if t <= keep else env for t in range(H + 1)]
    audit = And((negate(phi_safety), *_interval_conjuncts(steps)))
    return Encoding(audit, negate(phi_safety), tube.prefix(keep).box(H, env), f"prefix:{keep}")


# -- problem and outcome types -----------------------------------------------------


@dataclass
class Problem:
    phi: object
    plant: PlantModel
    ir: ControllerIR
    table: PathTable
    ranges: RangeTable
    H: int
    x0_box: np.ndarray
    attack: AttackSpec | None = None

    def __post_init__(self):
        self.x0_box = np.asarray(self.x0_box, dtype=float).reshape(-1, 2)
        self.closed_loop = ClosedLoop(self.plant, self.ir, self.table, self.attack)

    @property
    def controls(self) -> tuple[str, ...]:
        return self.table.control_vars

    def space(self, u_box=None) -> SearchSpace:
        return SearchSpace.build(self.H, self.x0_box, u_box, self.attack, self.plant.output_names)

    def open_model(self) -> OpenLoopModel:
        return OpenLoopModel(self.plant, self.controls, self.attack)

    def closed_model(self, target=None) -> ClosedLoopModel:
        return ClosedLoopModel(self.closed_loop, target)

    def tube(self, traj: CyberTrajectory) -> TrajectoryRange:
        return TrajectoryRange.of(traj, self.ranges)


@dataclass
class Vulnerability:
    trajectory: CyberTrajectory
    robustness: float
    witness: Trace
    x0: tuple[float, ...]
    call: int

    @property
    def attack(self) -> list[list[float]] | None:
        if not self.witness.attacks:
            return None
        return [[float(self.witness[a][t]) for a in self.witness.attacks] for t in range(self.witness.H + 1)]


@dataclass
class RefineOutcome:
    vulns: list[Vulnerability] = field(default_factory=list)
    abstracts: list[CyberTrajectory] = field(default_factory=list)
    explored: list[TrajectoryRange] = field(default_factory=list)


class CapReached(Exception):
    pass


def derive_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


class Session:
    """Falsifier front end that counts calls and enforces the global cap."""

    def __init__(self, problem: Problem, budget: Budget, seed: int = 0, grid: GridSpec | None = None, cap: int | None = None):
        self.problem = problem
        self.budget = budget
        self.seed = seed
        self.grid = grid
        self.cap = cap
        self.calls = {"abstract": 0, "concrete": 0, "exclusion": 0}
        self.evaluations = 0
        self.events: list[dict] = []

    @property
    def total_calls(self) -> int:
        return sum(self.calls.values())

    def _call(self, kind: str, model, phi, space) -> FalsifyResult:
        if self.cap is not None and self.total_calls >= self.cap:
            raise CapReached
        seed = derive_seed(self.seed, self.total_calls)
        self.calls[kind] += 1
        res = falsify(model, phi, space, self.budget, seed, grid=self.grid)
        self.evaluations += res.evaluations
        return res

    def abstract(self, enc: Encoding, kind: str = "abstract") -> FalsifyResult:
        p = self.problem
        return self._call(kind, p.open_model(), enc.objective, p.space(enc.u_box))

    def concrete(self, target: Sequence[int]) -> FalsifyResult:
        p = self.problem
        return self._call("concrete", p.closed_model(target), p.phi, p.space())

    def note(self, **event):
        event["calls"] = self.total_calls
        self.events.append(event)


def _concretise(session: Session, abstract: CyberTrajectory) -> tuple[Vulnerability | None, list[Vulnerability]]:
    """Closed-loop search along the abstract prefix.

    Returns the on-target vulnerability (if any) and every other violating
    closed-loop trace met during the search, keyed by its own realised path
    sequence.
    """
    p = session.problem
    res = session.concrete(abstract.path_ids)
    call = session.total_calls

    def vuln(tr: Trace) -> Vulnerability:
        x0 = tuple(float(tr[s][0]) for s in p.plant.state_names)
        return Vulnerability(CyberTrajectory(tr.paths, p.H), float(robustness(p.phi, tr)), tr, x0, call)

    main = vuln(res.trace) if res.found else None
    others = [vuln(tr) for key, tr in res.incidental.items() if main is None or key != main.trajectory.path_ids]
    return main, others


def _prefix_falsifiable(session: Session, tube: TrajectoryRange, keep: int) -> bool:
    p = session.problem
    return session.abstract(build_phi_prefix(p.phi, tube, keep, p.ranges, p.H)).found


def _step1(session: Session, abstract: CyberTrajectory, out: RefineOutcome) -> bool:
    """Tube-constrained abstract search then the concrete check; True if (a) succeeded."""
    p = session.problem
    tube = p.tube(abstract)
    if not _prefix_falsifiable(session, tube, tube.l):
        out.explored.append(tube)
        return False
    vuln, others = _concretise(session, abstract)
    for v in ([vuln] if vuln else []) + others:
        out.vulns.append(v)
        out.explored.append(p.tube(v.trajectory))
    if vuln is None:
        out.explored.append(tube)
    return True


def refine_linear(session: Session, abstract: CyberTrajectory) -> RefineOutcome:
    out = RefineOutcome()
    if _step1(session, abstract, out):
        return out
    tube = session.problem.tube(abstract)
    for i in range(1, abstract.l + 1):
        keep = abstract.l - i
        if _prefix_falsifiable(session, tube, keep):
            out.abstracts.append(abstract.prefix(keep))
            break
        out.explored.append(tube.prefix(keep))
    return out


def refine_binary(session: Session, abstract: CyberTrajectory) -> RefineOutcome:
    out = RefineOutcome()
    if _step1(session, abstract, out):
        return out
    tube = session.problem.tube(abstract)
    lo, hi, best = 1, abstract.l, None
    while lo <= hi:
        i = (lo + hi) // 2
        keep = abstract.l - i
        if _prefix_falsifiable(session, tube, keep):
            best, hi = i, i - 1
        else:
            out.explored.append(tube.prefix(keep))
            lo = i + 1
    if best is not None:
        out.abstracts.append(abstract.prefix(abstract.l - best))
    return out


REFINERS = {"linear": refine_linear, "binary": refine_binary}


# -- report ------------------------------------------------------------------------


def witness_name(trace: Trace) -> tuple[str, str]:
    text = trace.to_csv()
    digest = hashlib.sha256(text.encode()).hexdigest()
    return f"witness-{digest[:16]}.csv", digest


@dataclass
class Report:
    settings: dict
    table: PathTable
    ranges: RangeTable
    vulns: list[Vulnerability]
    explored: list[TrajectoryRange]
    calls: dict
    evaluations: int
    status: str
    events: list[dict]
    caveats: list[str]
    timing: dict = field(default_factory=dict)

    @property
    def vuln_set(self) -> set[tuple[int, ...]]:
        return {v.trajectory.path_ids for v in self.vulns}

    def to_dict(self) -> dict:
        vulns = []
        for i, v in enumerate(self.vulns):
            name, digest = witness_name(v.witness)
            entry = {
                "id": i,
                "path_ids": list(v.trajectory.path_ids),
                "robustness": v.robustness,
                "x0": list(v.x0),
                "witness": name,
                "witness_sha256": digest,
                "found_at_call": v.call,
            }
            if v.attack is not None:
                entry["attack"] = {"channels": list(v.witness.attacks), "values": v.attack}
            vulns.append(entry)
        return {
            "settings": self.settings,
            "status": self.status,
            "paths": self.table.digest(),
            "box": {v: [format_fraction(lo), format_fraction(hi)] for v, (lo, hi) in self.table.box.items()},
            "ranges": self.ranges.to_rows(),
            "vulnerabilities": vulns,
            "explored": [t.to_dict() for t in self.explored],
            "calls": dict(self.calls, total=sum(self.calls.values())),
            "evaluations": self.evaluations,
            "events": self.events,
            "caveats": self.caveats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for v in self.vulns:
            name, _ = witness_name(v.witness)
            (out / name).write_text(v.witness.to_csv())
        path = out / "report.json"
        path.write_text(self.to_json() + "\n")
        (out / "timing.json").write_text(json.dumps(self.timing, indent=2) + "\n")
        return path


# -- main loop -----------------------------------------------------------------------


class Explorer:
    """Mutable state of one run: frontier, explored tubes, vulnerabilities."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.frontier: list[CyberTrajectory] = []
        self.enqueued: set[tuple[int, ...]] = set()
        self.explored: dict[tuple[int, ...], TrajectoryRange] = {}
        self.vulns: dict[tuple[int, ...], Vulnerability] = {}

    def is_explored(self, traj: CyberTrajectory) -> bool:
        ids = traj.path_ids
        return any(ids[: len(k)] == k for k in self.explored)

    def is_known(self, traj: CyberTrajectory) -> bool:
        ids = traj.path_ids
        if ids in self.enqueued or self.is_explored(traj):
            return True
        return any(v[: len(ids)] == ids for v in self.vulns)

    def push(self, traj: CyberTrajectory) -> bool:
        if self.is_known(traj):
            return False
        self.frontier.append(traj)
        self.enqueued.add(traj.path_ids)
        return True

    def add_explored(self, tube: TrajectoryRange):
        self.explored.setdefault(tube.trajectory.path_ids, tube)

    def merge(self, out: RefineOutcome) -> list[str]:
        notes = []
        for v in out.vulns:
            if v.trajectory.path_ids not in self.vulns:
                self.vulns[v.trajectory.path_ids] = v
                notes.append(f"vuln {v.trajectory}")
        for tube in out.explored:
            self.add_explored(tube)
        for a in out.abstracts:
            if self.push(a):
                notes.append(f"abstract {a}")
        return notes


def range_labels(problem: Problem, trace: Trace) -> CyberTrajectory | None:
    """Label each step by the unique path whose range contains u_t, if any."""
    ids = []
    for t in range(trace.H + 1):
        u = {c: float(trace[c][t]) for c in problem.controls}
        hits = [r.path_id for r in problem.ranges.ranges if r.contains(u)]
        if len(hits) != 1:
            return None
        ids.append(hits[0])
    return CyberTrajectory(tuple(ids), trace.H)


def _candidate(problem: Problem, explorer: Explorer, trace: Trace) -> CyberTrajectory | None:
    """Abstract vulnerability from an open-loop witness, or None if nothing new."""
    traj = extract_path_sequence(trace, problem.table, problem.ranges)
    if not explorer.is_known(traj):
        return traj
    alt = range_labels(problem, trace)
    if alt is not None and not explorer.is_known(alt):
        log.info("extracted trajectory %s already known; using range labels %s", traj, alt)
        return alt
    return None


def verify_witness(problem: Problem, vuln: Vulnerability) -> bool:
    """Re-simulate the closed loop from the witness and compare bit-for-bit."""
    tr = vuln.witness
    s = None
    if tr.attacks:
        s = np.stack([tr[attack_channel(o)] for o in problem.plant.output_names], axis=1)
    again = simulate_closed(problem.closed_loop, vuln.x0, problem.H, s)
    return again.identical(tr) and robustness(problem.phi, again) < 0 and again.paths == vuln.trajectory.path_ids


def run(
    problem: Problem,
    budget: Budget,
    strategy: str = "linear",
    seed: int = 0,
    cap: int = 50,
    grid: GridSpec | None = None,
    settings: dict | None = None,
    max_duplicates: int = 3,
) -> Report:
    """Enumerate vulnerable cyber trajectories until the frontier empties or the cap is hit."""
    if strategy not in REFINERS:
        raise ValueError(f"unknown strategy {strategy!r}")
    refine = REFINERS[strategy]
    started = time.perf_counter()
    session = Session(problem, budget, seed, grid, cap)
    ex = Explorer(problem)
    caveats = [
        f"paths {a} and {b} have overlapping control ranges; excluding one tube may hide the other"
        for a, b in problem.ranges.overlaps()
    ]
    for c in caveats:
        log.warning(c)
    status = "frontier-exhausted"
    try:
        res = session.abstract(build_phi_initial(problem.phi, problem.ranges, problem.H), "abstract")
        if not res.found:
            ex.add_explored(TrajectoryRange.envelope(problem.ranges, problem.H))
            session.note(step="initial", outcome="not-found", robustness=res.robustness)
        else:
            cand = _candidate(problem, ex, res.trace)
            if cand is not None:
                ex.push(cand)
            session.note(step="initial", outcome="found", abstract=str(cand))
            iteration = 0
            duplicates = 0
            while ex.frontier:
                iteration += 1
                abstract = ex.frontier.pop(0)
                out = refine(session, abstract)
                notes = ex.merge(out)
                session.note(step="refine", iteration=iteration, abstract=str(abstract), result=notes)
                # Step 4: search the space outside every explored tube; a
                # find whose trajectory is already known is retried with a
                # fresh seed a few times before giving up
                while True:
                    enc = build_phi_exclusion(problem.phi, ex.explored.values(), problem.ranges, problem.H)
                    res = session.abstract(enc, "exclusion")
                    if not res.found:
                        session.note(step="exclusion", iteration=iteration, outcome="not-found", robustness=res.robustness)
                        break
                    cand = _candidate(problem, ex, res.trace)
                    if cand is not None:
                        duplicates = 0
                        ex.push(cand)
                        session.note(step="exclusion", iteration=iteration, outcome="found", abstract=str(cand))
                        break
                    duplicates += 1
                    session.note(step="exclusion", iteration=iteration, outcome="found-duplicate")
                    if ex.frontier or grid is not None or duplicates >= max_duplicates:
                        break
                if not ex.frontier and duplicates and (grid is not None or duplicates >= max_duplicates):
                    status = "stalled"
                    break
    except CapReached:
        status = "budget-exhausted"
        log.warning("falsifier call cap of %d reached", cap)
    vulns = list(ex.vulns.values())
    for v in vulns:
        if not verify_witness(problem, v):
            raise AssertionError(f"witness for {v.trajectory} does not replay")
    meta = {
        "seed": seed,
        "budget": str(budget),
        "strategy": strategy,
        "cap_falsify": cap,
        "grid": grid.to_dict() if grid else None,
        "horizon": problem.H,
    }
    meta.update(settings or {})
    return Report(
        settings=meta,
        table=problem.table,
        ranges=problem.ranges,
        vulns=vulns,
        explored=list(ex.explored.values()),
        calls=dict(session.calls),
        evaluations=session.evaluations,
        status=status,
        events=session.events,
        caveats=caveats,
        timing={"wall_seconds": time.perf_counter() - started},
    )
