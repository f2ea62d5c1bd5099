"""Bundled benchmark suites and the baselines they compare against.

Every suite returns a list of flat rows (dicts with the keys in ``COLUMNS``)
so results can be written as CSV and compared across runs.
"""

from __future__ import annotations

import copy
import csv
import io
import itertools
import time
from typing import Callable, Sequence

from . import config as cfgmod
from .cegar import Problem, derive_seed, run
from .falsifier import Budget, GridSpec, SearchSpace, falsify

COLUMNS = (
    "suite",
    "case",
    "method",
    "n",
    "H",
    "partitions",
    "seed",
    "calls",
    "vulns",
    "status",
    "seconds",
)


# -- problem builders --------------------------------------------------------------


def chain_config(n: int, H: int = 5, budget: str = "200x5", seed: int = 0) -> dict:
    """Drone controller on an n-integrator chain (the scaling instance)."""
    cfg = copy.deepcopy(cfgmod.bundled("chain"))
    cfg["name"] = f"chain-{n}"
    cfg["plant"]["params"]["n"] = n
    cfg["x0_box"] = [[-1, 0.95]] + [[-0.1, 0.1]] * (n - 1)
    cfg["horizon"] = H
    cfg["spec"] = f"G[0,{H}](x1 < 0.7)"
    cfg["budget"] = budget
    cfg["seed"] = seed
    return cfg


def bangbang_config(H: int) -> dict:
    """Bang-bang controller whose all-up control envelope just crosses the bound at step H."""
    cfg = copy.deepcopy(cfgmod.bundled("bangbang"))
    cfg["name"] = f"bangbang-{H}"
    cfg["horizon"] = H
    cfg["spec"] = f"G[0,{H}](x1 < {0.1 + (H - 1) * 0.1 + 0.05:.2f})"
    return cfg


# -- baselines --------------------------------------------------------------------


def partition_cells(box: Sequence[Sequence[float]], partitions: int) -> list[list[list[float]]]:
    """Split a box into ``partitions`` equal slices per dimension (product order)."""
    per_dim = []
    for lo, hi in box:
        w = (hi - lo) / partitions
        per_dim.append([[lo + i * w, lo + (i + 1) * w] for i in range(partitions)])
    return [list(cell) for cell in itertools.product(*per_dim)]


def partition_baseline(problem: Problem, budget: Budget, partitions: int, seed: int = 0) -> dict:
    """One closed-loop falsification per initial-state cell."""
    found = set()
    calls = 0
    t0 = time.perf_counter()
    for i, cell in enumerate(partition_cells(problem.x0_box, partitions)):
        space = SearchSpace.build(problem.H, cell, None, problem.attack, problem.plant.output_names)
        res = falsify(problem.closed_model(), problem.phi, space, budget, derive_seed(seed, i))
        calls += 1
        if res.found:
            found.add(tuple(res.trace.paths))
    return {"calls": calls, "vulns": found, "seconds": time.perf_counter() - t0}


def plain_falsification(problem: Problem, budget: Budget, runs: int = 50, seed: int = 0) -> dict:
    """Independent closed-loop falsifier runs with derived seeds; one trace per run."""
    found = set()
    t0 = time.perf_counter()
    for r in range(runs):
        res = falsify(problem.closed_model(), problem.phi, problem.space(), budget, derive_seed(seed, r))
        if res.found:
            found.add(tuple(res.trace.paths))
    return {"calls": runs, "vulns": found, "seconds": time.perf_counter() - t0}


def brute_force(problem: Problem, grid: GridSpec) -> set[tuple[int, ...]]:
    """Every cyber trajectory checked by a grid falsification constrained to it."""
    ids = [e.constraint.path_id for e in problem.table.entries]
    out = set()
    for tau in itertools.product(ids, repeat=problem.H + 1):
        res = falsify(problem.closed_model(tau), problem.phi, problem.space(), grid=grid)
        if res.found:
            out.add(tau)
    return out


# -- suites -----------------------------------------------------------------------


def _cegar_row(suite, case, problem, cfg, strategy, **extra) -> dict:
    t0 = time.perf_counter()
    rep = run(problem, cfgmod.budget_of(cfg), strategy, cfg["seed"], cfg["caps"]["falsify"], cfgmod.grid_of(cfg))
    row = {
        "suite": suite,
        "case": case,
        "method": f"cegar-{strategy}",
        "H": problem.H,
        "seed": cfg["seed"],
        "calls": sum(rep.calls.values()),
        "vulns": len(rep.vulns),
        "status": rep.status,
        "seconds": round(time.perf_counter() - t0, 3),
    }
    row.update(extra)
    row["_vuln_set"] = rep.vuln_set
    return row


def suite_tiny(seed: int = 0) -> list[dict]:
    cfg = cfgmod.bundled("example_3path")
    cfg["seed"] = seed
    cfg["horizon"] = 2
    cfg["spec"] = "G[0,2](x2 > -1)"
    problem = cfgmod.build_problem(cfg)
    return [_cegar_row("tiny", "example_3path", problem, cfg, s, n=problem.plant.n) for s in ("linear", "binary")]


def suite_scaling(seed: int = 0, ns: Sequence[int] = tuple(range(1, 11)), baseline_upto: int = 4,
                  partitions: Sequence[int] = (2, 3)) -> list[dict]:
    rows = []
    for n in ns:
        cfg = chain_config(n, seed=seed)
        problem = cfgmod.build_problem(cfg)
        for s in ("linear", "binary"):
            rows.append(_cegar_row("scaling", cfg["name"], problem, cfg, s, n=n))
        if n <= baseline_upto:
            for p in partitions:
                b = partition_baseline(problem, cfgmod.budget_of(cfg), p, seed)
                rows.append({
                    "suite": "scaling",
                    "case": cfg["name"],
                    "method": "partition",
                    "n": n,
                    "H": problem.H,
                    "partitions": p,
                    "seed": seed,
                    "calls": b["calls"],
                    "vulns": len(b["vulns"]),
                    "status": "done",
                    "seconds": round(b["seconds"], 3),
                    "_vuln_set": b["vulns"],
                })
    return rows


def suite_hsweep(seed: int = 0, Hs: Sequence[int] = (4, 8, 12, 16)) -> list[dict]:
    rows = []
    for H in Hs:
        cfg = bangbang_config(H)
        cfg["seed"] = seed
        problem = cfgmod.build_problem(cfg)
        for s in ("linear", "binary"):
            rows.append(_cegar_row("hsweep", cfg["name"], problem, cfg, s, n=problem.plant.n))
    return rows


SUITES: dict[str, Callable[..., list[dict]]] = {
    "tiny": suite_tiny,
    "scaling": suite_scaling,
    "hsweep": suite_hsweep,
}


def write_rows(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row.get(k, "") for k in COLUMNS})
    return buf.getvalue()
