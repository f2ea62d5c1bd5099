from fractions import Fraction as F

import numpy as np
import pytest

from ckvuln.affine import AffineExpr
from ckvuln.controller import execute, extract_paths, interpret, interpret_batch, parse, path_of, path_of_batch
from ckvuln.errors import (
    ControllerSyntaxError,
    NoFeasiblePath,
    OutOfDomain,
    PathExplosion,
    UndefinedVariable,
    UnsupportedConstruct,
)


class TestParse:
    def test_example_has_three_leaves(self, example_ir):
        assert example_ir.leaf_count() == 3
        assert example_ir.params == ("y1", "y2")

    def test_straight_line(self):
        ir = parse("double control(double y){ u = 1.0; return u; }")
        assert ir.leaf_count() == 1

    def test_non_affine_rejected(self):
        with pytest.raises(UnsupportedConstruct):
            parse("double control(double y){ u = y * y; return u; }")

    @pytest.mark.parametrize("body", ["while (y > 0) { y = y - 1; }", "u = sin(y);", "u = y / y;"])
    def test_unsupported(self, body):
        with pytest.raises(UnsupportedConstruct):
            parse("double control(double y){ " + body + " u = y; return u; }")

    def test_empty_source(self):
        with pytest.raises(ControllerSyntaxError):
            parse("")

    def test_syntax_error_has_location(self):
        with pytest.raises(ControllerSyntaxError) as exc:
            parse("double control(double y){\n  u = ;\n  return u; }")
        assert exc.value.line == 2

    def test_undefined_variable(self):
        ir = parse("double control(double y){ u = z + 1; return u; }")
        with pytest.raises(UndefinedVariable):
            extract_paths(ir, {"y": (F(0), F(1))})


class TestExtract:
    def test_example_paths(self, example_table):
        t = example_table
        assert t.k == 3
        assert t.control_vars == ("u",)
        fns = [e.function.outputs["u"] for e in t.entries]
        y1 = AffineExpr.var("y1")
        assert fns[0] == y1.scale(4) - AffineExpr.const(6)
        assert fns[1] == AffineExpr.const(0)
        assert fns[2] == y1.scale(-4) - AffineExpr.const(6)

    def test_engine_four_paths(self, engine_table):
        assert engine_table.k == 4
        # source order: (RPM>3300, Speed>80), (RPM>3300, Speed<=80), (RPM<=3300, Speed>80), both low
        probes = [(4000, 100), (4000, 50), (3000, 100), (3000, 50)]
        assert [path_of(engine_table, p) for p in probes] == [1, 2, 3, 4]

    def test_drone_five_paths(self, drone_table):
        assert drone_table.k == 5
        assert len(drone_table.pruned) > 0

    def test_drone_path_count_matches_sampled_clusters(self, drone_ir, drone_table):
        rng = np.random.default_rng(7)
        seen = {execute(drone_ir, [float(x)])[1] for x in rng.uniform(-3, 3, 100_000)}
        assert len(seen) == drone_table.k

    def test_no_feasible_path(self):
        ir = parse("double control(double y){ if (y > 5) { u = 1; } else { u = 2; } return u; }")
        table = extract_paths(ir, {"y": (F(6), F(7))})
        assert table.k == 1
        with pytest.raises(NoFeasiblePath):
            extract_paths(ir, {"y": (F(1), F(0))})

    def test_unassigned_control_on_feasible_path(self):
        ir = parse("double control(double y){ if (y > 5) { if (y < 8) { u = 1; } } else { u = 0; } return u; }")
        with pytest.raises(UndefinedVariable):
            extract_paths(ir, {"y": (F(0), F(10))})

    def test_path_cap(self):
        src = "double control(double y){ u = 0;" + "".join(
            f" if (y > {i}) {{ u = u + 1; }}" for i in range(6)) + " return u; }"
        ir = parse(src)
        assert extract_paths(ir, {"y": (F(-1), F(7))}).k == 7
        with pytest.raises(PathExplosion):
            extract_paths(ir, {"y": (F(-1), F(7))}, cap=5)

    def test_deterministic(self, example_ir, example_table):
        again = extract_paths(example_ir, {"y1": (F(-2), F(2)), "y2": (F(-2), F(2))})
        assert again.digest() == example_table.digest()


class TestPathOf:
    @pytest.mark.parametrize("y,expected", [((-0.7, 0.3), 1), ((-0.7, -0.3), 2), ((0.0, 5.0), 3)])
    def test_example(self, example_table, y, expected):
        t = extract_paths(parse(open(example_table_source()).read()), {"y1": (F(-2), F(2)), "y2": (F(-5), F(5))})
        assert path_of(t, y) == expected

    def test_boundaries_exact(self, example_table):
        assert path_of(example_table, (-0.5, 0.0)) == 2  # y2 > 0 is strict
        assert path_of(example_table, (-0.5, 1e-12)) == 1
        assert path_of(example_table, (-1.0, 1.0)) == 1
        assert path_of(example_table, (-0.5000001, 1.0)) == 1
        assert path_of(example_table, (-0.4999999, 1.0)) == 3

    def test_out_of_domain(self):
        ir = parse("double control(double y){ if (y > 0) { u = 1; } else { u = 2; } return u; }")
        table = extract_paths(ir, {"y": (F(0), F(1))})
        with pytest.raises(OutOfDomain):
            path_of_batch(table, {"y": np.array([np.nan])})
        assert path_of_batch(table, {"y": np.array([np.nan, 0.5])}, strict=False).tolist() == [0, 1]

    def test_batch_matches_scalar(self, engine_table):
        rng = np.random.default_rng(3)
        pts = {"RPM": rng.uniform(0, 6000, 500), "Speed": rng.uniform(0, 150, 500)}
        batch = path_of_batch(engine_table, pts)
        assert batch.tolist() == [path_of(engine_table, (r, s)) for r, s in zip(pts["RPM"], pts["Speed"])]


class TestInterpret:
    def test_example(self, example_ir):
        assert interpret(example_ir, (-0.7, 0.3))["u"] == pytest.approx(-8.8, abs=1e-12)

    def test_drone_clamps(self, drone_ir):
        assert interpret(drone_ir, (2.0,))["u"] == -10.0

    def test_engine_fourth_branch(self, engine_ir):
        assert interpret(engine_ir, (3300, 80))["Throttle"] == pytest.approx(87.7, abs=1e-9)

    def test_batch_equals_scalar(self, drone_ir):
        xs = np.linspace(-3, 3, 301)
        batch = interpret_batch(drone_ir, {"x1": xs})["u"]
        assert batch.tolist() == [interpret(drone_ir, (x,))["u"] for x in xs]

    def test_matches_table(self, drone_ir, drone_table):
        rng = np.random.default_rng(11)
        for x in rng.uniform(-3, 3, 2000):
            p = path_of(drone_table, (x,))
            exact = drone_table.entry(p).function.evaluate({"x1": F(float(x))})["u"]
            assert interpret(drone_ir, (x,))["u"] == float(exact)


def example_table_source():
    from ckvuln.config import CASES_DIR

    return CASES_DIR / "example_3path.c"
