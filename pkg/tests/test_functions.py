import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morreyheat import functions as fn
from morreyheat.errors import MorreyHeatError, NonIntegrableError, OverlapError, SingularPointError


def test_evaluate_examples():
    assert fn.evaluate(fn.RadialPower(1.0, 3), [2.0, 0, 0]) == 0.5
    assert fn.evaluate(fn.SpacedBallsG(1, 3), [10.0, 0, 0]) == 1.0
    assert fn.evaluate(fn.GaussianBump((0, 0), 1.0), [0, 0]) == 1.0
    with pytest.raises(SingularPointError):
        fn.evaluate(fn.RadialPower(1.0, 2), [0, 0])
    with pytest.raises(SingularPointError):
        fn.evaluate(fn.Weighted(0.5, fn.indicator_ball((0, 0))), [0, 0])


def test_unit_ball_volumes():
    assert fn.unit_ball_volume(1) == 2.0
    assert fn.unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert fn.unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    for n in range(1, 9):
        assert fn.unit_ball_volume(n) == pytest.approx(math.pi ** (n / 2) / math.gamma(n / 2 + 1), rel=1e-14)


def test_ball_integral_examples():
    disk = fn.indicator_ball((0, 0))
    assert fn.ball_integral(disk, (0, 0), 1.0) == (pytest.approx(math.pi, rel=1e-15), 0.0)
    for R in (0.5, 1.0, 2.0):
        val, err = fn.ball_integral(fn.RadialPower(1.0, 3), (0, 0, 0), R)
        assert val == pytest.approx(2 * math.pi * R * R, rel=1e-14) and err == 0
    assert fn.ball_integral(disk, (5.0, 0), 2.0, 3.0)[0] == 0.0


def test_ball_integral_quadrature_matches_closed_forms():
    disk = fn.indicator_ball((0, 0))
    # boundary kinks limit the polar rule; the reported error must cover the gap
    v, e = fn.ball_integral(disk, (0.3, 0.1), 0.8, method="quadrature")
    exact = fn.ball_integral(disk, (0.3, 0.1), 0.8)[0]
    assert abs(v - exact) <= e and e < 1e-4 * exact
    v, _ = fn.ball_integral(fn.RadialPower(1.0, 3, None, 2.0), (0, 0, 0), 2.0, method="quadrature")
    assert v == pytest.approx(8 * math.pi, rel=1e-10)
    g = fn.GaussianBump((0.5, 0, 0), 1.0)
    v, _ = fn.ball_integral(g, (0, 0, 0), 1.3, 2.0, method="quadrature")
    assert v == pytest.approx(fn.ball_integral(g, (0, 0, 0), 1.3, 2.0)[0], rel=1e-10)


def test_non_integrable_ball():
    with pytest.raises(NonIntegrableError):
        fn.ball_integral(fn.RadialPower(2.0, 2), (0, 0), 1.0)


def test_distribution_examples():
    assert fn.distribution(fn.indicator_ball((0,)), 0.5) == (2.0, True)
    for t in (0.5, 1.0, 3.0):
        m, exact = fn.distribution(fn.RadialPower(1.0, 2), t)
        assert exact and m == pytest.approx(math.pi / t ** 2, rel=1e-14)
    assert fn.distribution(fn.SpacedBallsG(4, 1), 0.5) == (18.0, True)


def test_overlap_rejected():
    with pytest.raises(OverlapError):
        fn.IndicatorBallUnion((((0, 0), 1.0), ((1.5, 0), 1.0)))


def test_spaced_balls_are_disjoint_and_sized():
    g = fn.SpacedBallsG(3, 2)
    u = g.as_union()
    assert len(u.balls) == 7
    assert fn.total_integral(g)[0] == pytest.approx(7 * math.pi, rel=1e-15)


def test_json_round_trip():
    items = [fn.RadialPower(1.5, 3, 0.1, 2.0), fn.GaussianBump((1, 2), 0.5), fn.SpacedBallsG(2, 1),
             fn.indicator_ball((0, 0, 1), 2.0), fn.Weighted(0.5, fn.Scaled(-2.0, fn.GaussianBump((0,), 1.0))),
             fn.GridSample((0.0, 0.0), 0.5, np.arange(6.0).reshape(2, 3))]
    for f in items:
        g = fn.from_json(fn.to_json(f))
        assert fn.to_json(g) == fn.to_json(f)
    assert fn.from_json('{"variant": "RadialPower", "a": 1}', n=3).n == 3
    with pytest.raises(MorreyHeatError):
        fn.from_json({"variant": "SpacedBallsG", "J": 2})


def test_grid_sample_integrals_are_sums():
    g = fn.GridSample((0.0, 0.0), 0.5, np.array([[1.0, 2.0], [0.0, -3.0]]))
    assert fn.total_integral(g, 2.0)[0] == pytest.approx(14 * 0.25)
    assert fn.distribution(g, 1.5) == (0.5, True)


def test_dilate_and_translate():
    f = fn.indicator_ball((1.0, 0.0), 1.0)
    assert fn.total_integral(fn.dilate(f, 2.0))[0] == pytest.approx(math.pi / 4)
    g = fn.dilate(fn.RadialPower(1.0, 3, None, 2.0), 2.0)
    x = np.array([[0.3, 0.2, 0.1]])
    assert fn._eval(g, x)[0] == pytest.approx(fn._eval(fn.RadialPower(1.0, 3, None, 2.0), 2 * x)[0])
    t = fn.translate(f, (2.0, 1.0))
    assert fn.evaluate(t, (3.0, 1.0)) == 1.0


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0))
def test_distribution_non_increasing(a, b):
    lo, hi = sorted((a, b))
    for f in (fn.RadialPower(1.0, 2), fn.GaussianBump((0, 0, 0), 0.7), fn.SpacedBallsG(2, 2),
              fn.Weighted(1.0, fn.GaussianBump((0,), 1.0))):
        assert fn.distribution(f, hi)[0] <= fn.distribution(f, lo)[0] + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(0.1, 4.0), st.floats(-2, 2), st.floats(-2, 2), st.floats(1.0, 4.0))
def test_union_ball_integral_properties(r1, r2, cx, cy, q):
    u = fn.IndicatorBallUnion((((0.0, 0.0), 1.0), ((3.0, 0.0), 0.5)))
    lo, hi = sorted((r1, r2))
    a = fn.ball_integral(u, (cx, cy), lo)[0]
    b = fn.ball_integral(u, (cx, cy), hi)[0]
    assert a <= b + 1e-12
    # {0,1}-valued: independent of the power
    assert fn.ball_integral(u, (cx, cy), hi, q)[0] == b
    # additivity over components
    parts = sum(fn.ball_integral(fn.IndicatorBallUnion((ball,)), (cx, cy), hi)[0] for ball in u.balls)
    assert b == pytest.approx(parts, rel=1e-12, abs=1e-14)
    # translation covariance
    moved = fn.translate(u, (1.5, -0.5))
    assert fn.ball_integral(moved, (cx + 1.5, cy - 0.5), hi)[0] == pytest.approx(b, rel=1e-12, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.0, 6.0))
def test_lens_volume_methods_agree(n, R1, R2, d):
    a = fn.lens_volume(n, R1, R2, d, method="explicit")
    b = fn.lens_volume(n, R1, R2, d, method="beta")
    assert a == pytest.approx(b, rel=1e-9, abs=1e-12)
