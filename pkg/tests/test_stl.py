import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckvuln.errors import NegativeInterval, StlSyntaxError, UnknownChannel
from ckvuln.stl import Always, And, Eventually, Not, Or, Pred, Until, negate, parse_stl, robustness
from ckvuln.stl.formula import depth
from oracles import random_formula, rob, sat

POS = {"pos": np.array([0.5, 0.9, 0.97])}


class TestParse:
    def test_always(self):
        f = parse_stl("G[0,50](pos < 0.98)")
        assert f == Always(0, 50, Pred.bound("pos", "<", "0.98"))

    def test_disjunction(self):
        f = parse_stl("(Speed < 120) | (RPM < 4500)")
        assert f == Or((Pred.bound("Speed", "<", 120), Pred.bound("RPM", "<", 4500)))

    def test_implication_rejected(self):
        with pytest.raises(StlSyntaxError):
            parse_stl("F[0,3](Speed >= 120) -> (RPM < 1)")

    def test_negative_interval(self):
        with pytest.raises(NegativeInterval):
            parse_stl("G[3,1](x<0)")

    def test_until_and_precedence(self):
        f = parse_stl("(x<1) U[0,2] (x<0) & !(y >= 2*x - 1)")
        assert isinstance(f, And)
        assert isinstance(f.children[0], Until) and isinstance(f.children[1], Not)

    def test_unbounded(self):
        f = parse_stl("F[1,inf](x > 0)")
        assert f.hi is None

    @pytest.mark.parametrize("bad", ["", "G[0,1]", "x <", "G(0,1)(x<0)", "x < 1 )", "x @ 1"])
    def test_syntax_errors(self, bad):
        with pytest.raises(StlSyntaxError):
            parse_stl(bad)

    def test_str_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            f = random_formula(rng, 3)
            sig = {"a": rng.normal(size=6), "b": rng.normal(size=6)}
            # singleton And/Or print as their child, so compare semantically
            assert robustness(parse_stl(str(f)), sig) == robustness(f, sig)


class TestRobustness:
    def test_always(self):
        assert robustness(parse_stl("G[0,2](pos<0.98)"), POS) == pytest.approx(0.01)

    def test_eventually(self):
        assert robustness(parse_stl("F[0,2](pos>=1)"), POS) == pytest.approx(-0.03)

    def test_until(self):
        x = {"x": np.array([0.5, 0.2, -0.1])}
        assert robustness(parse_stl("(x<1) U[0,2] (x<0)"), x) == pytest.approx(0.1)

    def test_unknown_channel(self):
        with pytest.raises(UnknownChannel):
            robustness(parse_stl("q < 1"), POS)

    def test_batch_matches_rows(self):
        rng = np.random.default_rng(0)
        sig = {"a": rng.normal(size=(7, 6)), "b": rng.normal(size=(7, 6))}
        f = parse_stl("G[0,3](a < 1) | (b > 0) U[1,4] (a > b)")
        batch = robustness(f, sig)
        for i in range(7):
            row = {k: v[i] for k, v in sig.items()}
            assert batch[i] == robustness(f, row)

    def test_window_clipped_at_end(self):
        # windows past the trace end use the available samples
        assert robustness(parse_stl("G[1,10](pos<0.98)"), POS) == pytest.approx(0.01)
        assert robustness(parse_stl("F[5,10](pos<0.98)"), POS) == -math.inf


class TestNegate:
    def test_duality(self):
        f = negate(parse_stl("G[0,4](x < 2)"))
        assert f == Eventually(0, 4, Pred.bound("x", ">=", 2))

    def test_de_morgan(self):
        a, b = Pred.bound("x", "<", 1), Pred.bound("y", ">", 0)
        assert negate(And((a, b))) == Or((negate(a), negate(b)))

    def test_involution_on_random(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            f = random_formula(rng, 3)
            sig = {"a": rng.normal(size=6), "b": rng.normal(size=6)}
            r = robustness(f, sig)
            assert robustness(negate(f), sig) == -r
            assert robustness(negate(negate(f)), sig) == r


signals = st.integers(1, 8).flatmap(
    lambda T: st.fixed_dictionaries({
        "a": st.lists(st.floats(-5, 5), min_size=T, max_size=T),
        "b": st.lists(st.floats(-5, 5), min_size=T, max_size=T),
    })
)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**31), sig=signals)
def test_matches_reference(seed, sig):
    f = random_formula(np.random.default_rng(seed), 3)
    assert depth(f) <= 3
    arr = {k: np.array(v) for k, v in sig.items()}
    expected = rob(f, sig)
    got = robustness(f, arr)
    if math.isinf(expected):
        assert got == expected
    else:
        assert abs(got - expected) <= 1e-9
    if got != 0:
        assert (got > 0) == sat(f, sig)
