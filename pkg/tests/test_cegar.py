import math
from fractions import Fraction as F

import numpy as np
import pytest

from ckvuln import config as cfgmod
from ckvuln.cegar import (
    Problem,
    Session,
    build_phi_exclusion,
    build_phi_initial,
    build_phi_prefix,
    derive_seed,
    exclusion_formula,
    refine_binary,
    refine_linear,
    run,
    verify_witness,
)
from ckvuln.controller import extract_paths, parse
from ckvuln.falsifier import Budget, GridSpec, OpenLoopModel, SearchSpace, falsify
from ckvuln.plant import IntegratorChain
from ckvuln.ranges import path_ranges
from ckvuln.stl import negate, parse_stl, robustness
from ckvuln.trajectory import CyberTrajectory, TrajectoryRange
from conftest import source

DRONE_PHI = parse_stl("G[0,3](pos < 0.98)")


def bangbang_problem(spec, H, x0=((0.0, 0.0),)):
    ir = parse(source("bangbang.c"))
    table = extract_paths(ir, {"y": (F(-10), F(10))})
    return Problem(parse_stl(spec), IntegratorChain(1, 0.1), ir, table, path_ranges(table), H, list(x0))


class TestEncodings:
    def test_initial_envelope(self, drone_ranges):
        enc = build_phi_initial(DRONE_PHI, drone_ranges, 3)
        assert enc.u_box.shape == (4, 1, 2)
        assert np.all(enc.u_box[..., 0] == -10) and np.all(enc.u_box[..., 1] == 10)
        assert enc.residual == negate(DRONE_PHI)
        assert enc.objective == DRONE_PHI

    def test_initial_single_path(self):
        ir = parse("double control(double y){ u = 2.5; return u; }")
        rt = path_ranges(extract_paths(ir, {"y": (F(-1), F(1))}))
        enc = build_phi_initial(parse_stl("G[0,2](x1 < 1)"), rt, 2)
        assert np.all(enc.u_box == 2.5)

    def test_initial_horizon_zero(self, drone_ranges):
        enc = build_phi_initial(parse_stl("pos < 0.98"), drone_ranges, 0)
        assert enc.u_box.shape == (1, 1, 2)

    def test_audit_agrees_in_box(self, drone_ranges):
        # inside the clip box the audit formula and the residual have the same sign
        enc = build_phi_initial(DRONE_PHI, drone_ranges, 3)
        rng = np.random.default_rng(0)
        for _ in range(50):
            sig = {"pos": rng.uniform(0, 2, 4), "u": rng.uniform(-10, 10, 4)}
            assert (robustness(enc.audit, sig) > 0) == (robustness(enc.residual, sig) > 0)

    def test_exclusion_empty(self, drone_ranges):
        enc = build_phi_exclusion(DRONE_PHI, [], drone_ranges, 3)
        assert enc.residual == negate(DRONE_PHI)
        assert np.array_equal(enc.u_box, build_phi_initial(DRONE_PHI, drone_ranges, 3).u_box)

    def test_exclusion_of_envelope_is_empty(self, drone_ranges):
        env = TrajectoryRange.envelope(drone_ranges, 3)
        enc = build_phi_exclusion(DRONE_PHI, [env], drone_ranges, 3)
        space = SearchSpace(3, [[-1, 0.5], [-1, 1]], enc.u_box)
        res = falsify(OpenLoopModel(IntegratorChain(2, 0.1, names=("pos", "vel"))), enc.objective, space,
                      grid=GridSpec(x0_levels=5, u_levels=5))
        assert not res.found

    def test_exclusion_escape(self, drone_table, drone_ranges):
        low = next(r.path_id for r in drone_ranges.ranges if r.interval("u") == (-10, -8))
        tube = TrajectoryRange.of(CyberTrajectory((low,) * 4, 3), drone_ranges)
        sig = {"u": np.array([-9.0, 9.0, -9.0, -9.0])}
        assert robustness(exclusion_formula(tube), sig) > 0
        assert robustness(exclusion_formula(tube), {"u": np.full(4, -9.0)}) < 0

    def test_prefix(self, example_table):
        rt = path_ranges(example_table)
        tube = TrajectoryRange.of(CyberTrajectory((1, 2), 3), rt)
        enc = build_phi_prefix(parse_stl("G[0,3](x2 > -1)"), tube, 1, rt, 3)
        assert enc.u_box[0, 0].tolist() == [-10, -8]
        assert enc.u_box[1, 0].tolist() == [0, 0]
        env = [float(rt.global_lo["u"]), float(rt.global_hi["u"])]
        assert enc.u_box[2, 0].tolist() == env
        enc0 = build_phi_prefix(parse_stl("G[0,3](x2 > -1)"), tube, 0, rt, 3)
        assert enc0.u_box[1, 0].tolist() == env
        with pytest.raises(ValueError):
            build_phi_prefix(parse_stl("G[0,3](x2 > -1)"), tube, 2, rt, 3)


class TestRefine:
    def session(self, problem, budget="50x2"):
        return Session(problem, Budget.parse(budget), 0, GridSpec(x0_levels=1, u_levels=3))

    def test_certified(self):
        p = bangbang_problem("G[0,4](x1 < 5)", 4)
        for refine in (refine_linear, refine_binary):
            out = refine(self.session(p), CyberTrajectory((2, 2, 2, 2, 2), 4))
            assert not out.vulns and not out.abstracts
            kept = sorted(len(t.steps) for t in out.explored)
            if refine is refine_linear:
                assert kept == [1, 2, 3, 4, 5]

    def test_genuine(self):
        # from 0 the bang-bang loop climbs 0.1 per step until y >= 0.15
        p = bangbang_problem("G[0,4](x1 < 0.15)", 4)
        out = refine_linear(self.session(p), CyberTrajectory((1, 1, 2, 1, 2), 4))
        assert [v.trajectory.path_ids for v in out.vulns] == [(1, 1, 2, 1, 2)]
        assert not out.abstracts
        assert verify_witness(p, out.vulns[0])

    def test_spurious_then_relaxed(self):
        # pinned u = 1,-1,-1,-1 peaks at 0.1 and freeing u3 alone reaches 0;
        # freeing u2 and u3 reaches 0.2
        p = bangbang_problem("G[0,4](x1 < 0.15)", 4)
        traj = CyberTrajectory((1, 2, 2, 2), 4)
        for refine in (refine_linear, refine_binary):
            out = refine(self.session(p), traj)
            assert not out.vulns
            assert [a.path_ids for a in out.abstracts] == [(1, 2)]
            assert sorted(t.trajectory.path_ids for t in out.explored) == [(1, 2, 2), (1, 2, 2, 2)]

    def test_binary_call_count(self):
        p = bangbang_problem("G[0,16](x1 < 50)", 16)
        traj = CyberTrajectory((2,) * 17, 16)
        lin, bis = Session(p, Budget(5, 1)), Session(p, Budget(5, 1))
        refine_linear(lin, traj)
        refine_binary(bis, traj)
        assert lin.total_calls == 1 + 16
        assert bis.total_calls <= 1 + math.ceil(math.log2(16)) + 1

    def test_single_step(self):
        p = bangbang_problem("G[0,1](x1 < 0.05)", 1)
        traj = CyberTrajectory((2, 2), 1)
        a, b = self.session(p), self.session(p)
        oa, ob = refine_linear(a, traj), refine_binary(b, traj)
        assert a.total_calls == b.total_calls
        assert [x.path_ids for x in oa.abstracts] == [x.path_ids for x in ob.abstracts]
        assert [t.trajectory for t in oa.explored] == [t.trajectory for t in ob.explored]


class TestRun:
    def test_single_path_certified(self):
        cfg = cfgmod.bundled("stable")
        rep = run(cfgmod.build_problem(cfg), cfgmod.budget_of(cfg), "linear", 0, 50)
        assert rep.status == "frontier-exhausted"
        assert rep.vulns == [] and len(rep.explored) == 1
        assert sum(rep.calls.values()) >= 1

    def test_drone_nonempty_and_replayable(self):
        cfg = cfgmod.bundled("drone")
        p = cfgmod.build_problem(cfg)
        rep = run(p, cfgmod.budget_of(cfg), "linear", cfg["seed"], 20)
        assert rep.vulns
        for v in rep.vulns:
            assert verify_witness(p, v) and v.robustness < 0

    def test_strategies_agree_tiny(self):
        from ckvuln.bench import suite_tiny
        rows = suite_tiny()
        assert rows[0]["_vuln_set"] == rows[1]["_vuln_set"]
        assert all(r["status"] == "frontier-exhausted" for r in rows)

    def test_deterministic(self):
        cfg = cfgmod.bundled("drone")
        p = cfgmod.build_problem(cfg)
        a = run(p, Budget(30, 3), "binary", 5, 8)
        b = run(p, Budget(30, 3), "binary", 5, 8)
        assert a.vuln_set == b.vuln_set and a.calls == b.calls

    def test_unknown_strategy(self):
        cfg = cfgmod.bundled("stable")
        with pytest.raises(ValueError):
            run(cfgmod.build_problem(cfg), Budget(1, 1), "ternary")

    def test_cap(self):
        cfg = cfgmod.bundled("drone")
        rep = run(cfgmod.build_problem(cfg), cfgmod.budget_of(cfg), "linear", 1, 2)
        assert rep.status == "budget-exhausted" and sum(rep.calls.values()) == 2

    def test_report_dict(self):
        cfg = cfgmod.bundled("drone")
        rep = run(cfgmod.build_problem(cfg), cfgmod.budget_of(cfg), "linear", 1, 6)
        d = rep.to_dict()
        assert d["calls"]["total"] == sum(rep.calls.values())
        assert len(d["vulnerabilities"]) == len(rep.vulns)
        for entry in d["vulnerabilities"]:
            assert entry["witness"].startswith("witness-")


def test_derive_seed_stable():
    assert derive_seed(0, 1) == derive_seed(0, 1) != derive_seed(0, 2)
