"""Command-line interface.

    ckvuln extract --config cfg.json
    ckvuln ranges  --config cfg.json
    ckvuln falsify --config cfg.json [--grid-mode]
    ckvuln run     --config cfg.json --out results/
    ckvuln replay  --report results/report.json --vuln 0
    ckvuln bench   --suite tiny --out bench/

Exit codes: 0 success, 1 property failure (replay), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .cegar import run, witness_name
from .errors import CkvulnError
from .falsifier import Budget, GridSpec, falsify
from .plant import attack_channel, simulate_closed
from .ranges import path_ranges
from .stl import robustness
from .svg import plot_trace
from .trace import Trace

log = logging.getLogger("ckvuln")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_config(args) -> dict:
    if args.case:
        cfg = cfgmod.bundled(args.case)
    elif args.config:
        cfg = cfgmod.load(args.config)
    else:
        raise UsageError("one of --config or --case is required")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if getattr(args, "strategy", None):
        cfg["strategy"] = args.strategy
    if getattr(args, "budget", None):
        Budget.parse(args.budget)
        cfg["budget"] = args.budget
    if getattr(args, "cap_falsify", None):
        cfg["caps"]["falsify"] = args.cap_falsify
    if getattr(args, "grid_mode", False) and cfg.get("grid") is None:
        cfg["grid"] = GridSpec().to_dict()
    if getattr(args, "out", None):
        cfg["output_dir"] = args.out
    return cfg


def _emit(obj, out_dir: str | None, name: str):
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text + "\n")


def cmd_extract(args) -> int:
    cfg = _load_config(args)
    _, table = cfgmod.build_table(cfg)
    ranges = path_ranges(table)
    _emit({"k": table.k, "inputs": list(table.input_vars), "controls": list(table.control_vars),
           "paths": table.digest(), "ranges": ranges.to_rows()}, args.out, "paths.json")
    return EXIT_OK


def cmd_ranges(args) -> int:
    cfg = _load_config(args)
    _, table = cfgmod.build_table(cfg)
    ranges = path_ranges(table)
    _emit({"ranges": ranges.to_rows(), "overlaps": ranges.overlaps()}, args.out, "ranges.json")
    return EXIT_OK


def cmd_falsify(args) -> int:
    """Plain closed-loop falsification of the requirement (no abstraction)."""
    cfg = _load_config(args)
    problem = cfgmod.build_problem(cfg)
    res = falsify(problem.closed_model(), problem.phi, problem.space(), cfgmod.budget_of(cfg),
                  cfg["seed"], grid=cfgmod.grid_of(cfg))
    summary = res.summary()
    if res.found:
        summary["path_ids"] = list(res.trace.paths)
        if args.out:
            name, _ = witness_name(res.trace)
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / name).write_text(res.trace.to_csv())
            summary["witness"] = name
    _emit(summary, args.out, "falsify.json")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    problem = cfgmod.build_problem(cfg)
    report = run(
        problem,
        cfgmod.budget_of(cfg),
        cfg["strategy"],
        cfg["seed"],
        cfg["caps"]["falsify"],
        cfgmod.grid_of(cfg),
        settings={"config": cfg},
    )
    out = Path(cfg["output_dir"])
    path = report.write(out)
    legend = {e.constraint.path_id: str(e.constraint) for e in problem.table.entries}
    for i, v in enumerate(report.vulns):
        svg = plot_trace(v.witness, problem.plant.state_names, legend, title=f"vulnerability {i}: {v.trajectory}")
        (out / f"vuln-{i}.svg").write_text(svg)
    print(f"status: {report.status}")
    print(f"falsifier calls: {sum(report.calls.values())} {report.calls}")
    print(f"vulnerabilities: {len(report.vulns)}")
    for i, v in enumerate(report.vulns):
        print(f"  [{i}] {v.trajectory}  robustness={v.robustness:.6g}")
    print(f"report: {path}")
    return EXIT_OK


def replay(report_path, vuln_id: int) -> tuple[int, dict]:
    """Re-simulate one reported vulnerability; returns (exit code, details)."""
    report_path = Path(report_path)
    if not report_path.is_file():
        raise UsageError(f"report not found: {report_path}")
    report = json.loads(report_path.read_text())
    vulns = report.get("vulnerabilities", [])
    matches = [v for v in vulns if v["id"] == vuln_id]
    if not matches:
        raise UsageError(f"vulnerability {vuln_id} not in report (have {len(vulns)})")
    entry = matches[0]
    cfg = report["settings"]["config"]
    problem = cfgmod.build_problem(cfg)
    wpath = report_path.parent / entry["witness"]
    if not wpath.is_file():
        raise UsageError(f"witness file missing: {wpath}")
    try:
        stored = Trace.from_csv(wpath.read_text())
        x0 = [float(stored[s][0]) for s in problem.plant.state_names]
        s = None
        if stored.attacks:
            s = np.stack([stored[attack_channel(o)] for o in problem.plant.output_names], axis=1)
    except (KeyError, ValueError, IndexError) as exc:
        raise UsageError(f"corrupt witness {wpath.name}: {exc}") from None
    again = simulate_closed(problem.closed_loop, x0, problem.H, s)
    rob = robustness(problem.phi, again)
    paths_match = list(again.paths) == entry["path_ids"]
    identical = again.identical(stored)
    ok = rob < 0 and paths_match and identical
    details = {
        "vuln": vuln_id,
        "robustness": rob,
        "path_ids": entry["path_ids"],
        "replayed_path_ids": list(again.paths),
        "paths_match": paths_match,
        "trace_identical": identical,
        "pass": ok,
    }
    return (EXIT_OK if ok else EXIT_FAIL), details


def cmd_replay(args) -> int:
    code, details = replay(args.report, args.vuln)
    print(json.dumps(details, indent=2))
    return code


def cmd_bench(args) -> int:
    from .bench import SUITES, write_rows

    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    rows = SUITES[args.suite](seed=args.seed or 0)
    text = write_rows(rows)
    print(text, end="")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / f"bench-{args.suite}.csv").write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckvuln", description="Enumerate cyber-kinetic vulnerabilities of control programs.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, run_flags=False):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--case", help="bundled case study name instead of --config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        if run_flags:
            sp.add_argument("--strategy", choices=["linear", "binary"])
            sp.add_argument("--budget", help="ITERSxRUNS, e.g. 100x5")
            sp.add_argument("--cap-falsify", type=int, dest="cap_falsify")
            sp.add_argument("--grid-mode", action="store_true", dest="grid_mode",
                            help="use the deterministic lattice falsifier")

    common(sub.add_parser("extract", help="print the path table"))
    common(sub.add_parser("ranges", help="print per-path control ranges"))
    common(sub.add_parser("falsify", help="plain closed-loop falsification"), run_flags=True)
    common(sub.add_parser("run", help="enumerate vulnerabilities"), run_flags=True)
    rp = sub.add_parser("replay", help="re-check a reported vulnerability")
    rp.add_argument("--report", required=True)
    rp.add_argument("--vuln", type=int, required=True)
    bp = sub.add_parser("bench", help="run a bundled benchmark suite")
    bp.add_argument("--suite", default="tiny")
    bp.add_argument("--seed", type=int)
    bp.add_argument("--out")
    return p


COMMANDS = {
    "extract": cmd_extract,
    "ranges": cmd_ranges,
    "falsify": cmd_falsify,
    "run": cmd_run,
    "replay": cmd_replay,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    if args.verbose == 0:
        logging.getLogger("ckvuln.falsifier").setLevel(logging.ERROR)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, CkvulnError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
