import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckvuln.errors import ChannelMismatch, ConfigError
from ckvuln.falsifier import (
    Budget,
    ClosedLoopModel,
    GridSpec,
    OpenLoopModel,
    SearchSpace,
    extract_path_sequence,
    falsify,
    grid_points,
)
from ckvuln.plant import ClosedLoop, DoubleIntegrator, IntegratorChain, simulate_closed
from ckvuln.stl import negate, parse_stl, robustness
from ckvuln.trace import Trace


def open_space(H, x0, u):
    return SearchSpace(H, x0, np.tile(u, (H + 1, 1, 1)))


class TestBudget:
    def test_parse(self):
        assert Budget.parse("100x5") == Budget(100, 5)
        assert str(Budget.parse(" 7 X 2 ")) == "7x2"

    @pytest.mark.parametrize("bad", ["100", "x5", "0x5", "ax1"])
    def test_parse_bad(self, bad):
        with pytest.raises(ConfigError):
            Budget.parse(bad)


class TestSearchSpace:
    def test_split(self):
        sp = open_space(2, [[0, 1], [2, 3]], [[-1, 1]])
        Z = np.arange(5.0)[None]
        x0, U, S = sp.split(Z)
        assert x0.tolist() == [[0, 1]] and U.shape == (1, 3, 1) and S is None

    def test_bad_box(self):
        with pytest.raises(ConfigError):
            SearchSpace(1, [[1, 0]])
        with pytest.raises(ConfigError):
            SearchSpace(1, [[0, 1]], np.zeros((5, 1, 2)))

    def test_grid_levels(self):
        sp = open_space(1, [[0, 1], [2, 2]], [[-1, 1]])
        lv = grid_points(sp, GridSpec(x0_levels=3, u_levels=2))
        assert [len(v) for v in lv] == [3, 1, 2, 2]


class TestFalsify:
    plant = IntegratorChain(1, 0.1)

    def test_unreachable(self):
        # the unreachable event is searched for through its negation, the requirement
        res = falsify(OpenLoopModel(self.plant), negate(parse_stl("F[0,5](x1 > 1000000000)")),
                      open_space(5, [[0, 1]], [[-1, 1]]), Budget(30, 2), seed=0)
        assert not res.found and res.robustness > 0

    def test_tautology(self):
        res = falsify(OpenLoopModel(self.plant), parse_stl("G[0,5](x1 < x1 + 1)"),
                      open_space(5, [[0, 1]], [[-1, 1]]), Budget(30, 2), seed=0)
        assert not res.found and res.robustness == pytest.approx(1.0)

    def test_double_integrator_found(self):
        # closed form: u = 10 from rest reaches 0.98 well within 50 steps of 0.1 s
        pos = 0.0
        vel = 0.0
        for _ in range(50):
            pos, vel = pos + 0.1 * vel, vel + 1.0
        assert pos >= 0.98
        res = falsify(OpenLoopModel(DoubleIntegrator(0.1)), parse_stl("G[0,50](pos < 0.98)"),
                      open_space(50, [[0, 0.1], [0, 0.1]], [[-10, 10]]), Budget(100, 5), seed=0)
        assert res.found
        assert robustness(parse_stl("G[0,50](pos < 0.98)"), res.trace) == res.robustness < 0

    def test_deterministic(self):
        args = (OpenLoopModel(self.plant), parse_stl("G[0,4](x1 < 0.3)"), open_space(4, [[0, 0.1]], [[-1, 1]]))
        a = falsify(*args, Budget(50, 3), seed=4)
        b = falsify(*args, Budget(50, 3), seed=4)
        assert a.found == b.found and a.trace.identical(b.trace) and a.evaluations == b.evaluations

    def test_grid_first_find(self):
        res = falsify(OpenLoopModel(self.plant), parse_stl("G[0,2](x1 < 0.15)"),
                      open_space(2, [[0, 0]], [[-1, 1]]), grid=GridSpec(u_levels=3))
        assert res.found and res.mode == "grid"
        np.testing.assert_allclose(res.trace["u"][:2], [1, 1])

    def test_grid_limit(self):
        with pytest.raises(ConfigError):
            falsify(OpenLoopModel(self.plant), parse_stl("x1 < 1"),
                    open_space(20, [[0, 1]], [[-1, 1]]), grid=GridSpec(u_levels=3, max_points=1000))

    def test_channel_mismatch(self):
        with pytest.raises(ChannelMismatch):
            falsify(OpenLoopModel(self.plant), parse_stl("G[0,2](pos < 1)"),
                    open_space(2, [[0, 1]], [[-1, 1]]), Budget(2, 1))

    def test_closed_loop_witness_replays(self, drone_ir, drone_table):
        cl = ClosedLoop(DoubleIntegrator(0.1), drone_ir, drone_table)
        phi = parse_stl("G[0,10](pos < 0.98)")
        sp = SearchSpace(10, [[-1, 0.5], [-1, 1]])
        res = falsify(ClosedLoopModel(cl), phi, sp, Budget(100, 5), seed=1)
        assert res.found
        x0 = [res.trace["pos"][0], res.trace["vel"][0]]
        again = simulate_closed(cl, x0, 10)
        assert again.identical(res.trace)
        assert robustness(phi, again) < 0
        for key, tr in res.incidental.items():
            assert tr.paths == key and robustness(phi, tr) < 0

    def test_target_penalty(self, drone_ir, drone_table):
        cl = ClosedLoop(DoubleIntegrator(0.1), drone_ir, drone_table)
        sp = SearchSpace(2, [[0, 0], [0, 0]])
        model = ClosedLoopModel(cl, target=(1, 1, 1))
        res = falsify(model, parse_stl("G[0,2](pos < 5)"), sp, grid=GridSpec())
        assert res.objective == pytest.approx(res.robustness + 3e3)


class TestExtractPathSequence:
    def test_example(self, example_table):
        tr = Trace({"y1": [-0.7, -0.7, 0.0], "y2": [0.3, -0.3, 5.0]}, 0.1, outputs=("y1", "y2"))
        assert extract_path_sequence(tr, example_table).path_ids == (1, 2, 3)

    def test_constant(self, drone_table):
        tr = Trace({"x1": [0.2] * 6}, 0.1, outputs=("x1",))
        paths = extract_path_sequence(tr, drone_table).path_ids
        assert len(set(paths)) == 1 and len(paths) == 6

    def test_engine_convention(self, engine_table):
        tr = Trace({"RPM": [3500, 3000, 3000, 3000], "Speed": [90, 70, 70, 70]}, 0.1, outputs=("RPM", "Speed"))
        assert extract_path_sequence(tr, engine_table).path_ids == (1, 4, 4, 4)

    def test_attack_channel_used(self, engine_table):
        tr = Trace({"RPM": [3290.0], "Speed": [79.0], "s_RPM": [20.0], "s_Speed": [2.0]}, 0.1,
                   outputs=("RPM", "Speed"), attacks=("s_RPM", "s_Speed"))
        assert extract_path_sequence(tr, engine_table).path_ids == (1,)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_found_means_negative(seed):
    plant = IntegratorChain(2, 0.1)
    res = falsify(OpenLoopModel(plant), parse_stl("G[0,4](x1 < 0.05)"),
                  open_space(4, [[-0.1, 0.1], [-0.5, 0.5]], [[-1, 1]]), Budget(10, 2), seed=seed)
    r = robustness(parse_stl("G[0,4](x1 < 0.05)"), res.trace)
    assert r == res.robustness
    assert res.found == (r < 0)
