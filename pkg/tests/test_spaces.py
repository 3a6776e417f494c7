import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morreyheat import functions as fn
from morreyheat import spaces as sp
from morreyheat.errors import DivergentError, MorreyHeatError, NonIntegrableError
from morreyheat.scaling import INF

V2, V3 = math.pi, 4 * math.pi / 3
DISK = fn.indicator_ball((0.0, 0.0))

CORPUS = [
    (DISK, 4.0, 2.0),
    (fn.indicator_ball((0.0, 0.0, 0.0), 0.5), 3.0, 1.5),
    (fn.SpacedBallsG(2, 1), 2.0, 1.0),
    (fn.SpacedBallsG(2, 2), 3.0, 1.5),
    (fn.GaussianBump((0.0, 0.0), 1.0), 3.0, 1.5),
    (fn.RadialPower(1.0, 3, None, 1.0), 2.5, 1.2),
]


def test_normvalue_invariants():
    with pytest.raises(MorreyHeatError):
        sp.NormValue(-1.0)
    assert sp.NormValue(1.0, 0.3, sp.CLOSED).error == 0.0
    assert sp.NormValue(2.0, 0.1, sp.QUAD).scaled(-3).value == 6.0


def test_lebesgue_examples():
    v = sp.lebesgue_norm(DISK, 2)
    assert v.value == pytest.approx(math.sqrt(math.pi), rel=1e-15) and v.method == sp.CLOSED
    v = sp.lebesgue_norm(fn.RadialPower(1.0, 3, None, 1.0), 2)
    assert v.value == pytest.approx(math.sqrt(4 * math.pi), rel=1e-14)
    assert sp.lebesgue_norm(fn.zero_function(2), 3).value == 0.0
    with pytest.raises(NonIntegrableError):
        sp.lebesgue_norm(fn.RadialPower(1.5, 3), 2)


def test_lebesgue_gaussian_oracle():
    # exp(-|x|^2 / (4w)) in R^n: ||.||_p^p = (4 pi w / p)^{n/2}
    for n, w, p in ((1, 1.0, 2.0), (2, 0.5, 3.0), (3, 2.0, 1.5)):
        v = sp.lebesgue_norm(fn.GaussianBump((0.0,) * n, w), p).value
        assert v == pytest.approx((4 * math.pi * w / p) ** (n / (2 * p)), rel=1e-10)


@pytest.mark.parametrize("n, p", [(1, 2.0), (2, 3.0), (3, 6.0), (4, 1.5)])
def test_weak_norm_of_critical_power(n, p):
    v = sp.weak_lebesgue_norm(fn.RadialPower(n / p, n), p)
    assert v.value == pytest.approx(fn.unit_ball_volume(n) ** (1 / p), rel=1e-12)


def test_weak_norm_examples():
    assert sp.weak_lebesgue_norm(DISK, 3).value == pytest.approx(math.pi ** (1 / 3), rel=1e-14)
    v = sp.weak_lebesgue_norm(fn.SpacedBallsG(4, 1), 2)
    assert v.value == pytest.approx(math.sqrt(18), rel=1e-15)


def test_weak_norm_search_agrees_with_closed_form():
    prof = fn.radial_profile(fn.RadialPower(1.0, 3, 0.2, 3.0))
    a = sp.radial_level_norm(prof, 2.5, INF)
    b = sp.radial_level_norm(prof, 2.5, INF, method="search")
    assert b.value == pytest.approx(a.value, rel=1e-6)


def test_lorentz_examples():
    v = sp.lorentz_norm(fn.indicator_ball((0.0,)), 2, 2)
    assert v.value == pytest.approx(1.0, rel=1e-15)
    for f in (DISK, fn.GaussianBump((0.0, 0.0), 1.0), fn.SpacedBallsG(3, 1)):
        assert sp.lorentz_norm(f, 3, INF).value == sp.weak_lebesgue_norm(f, 3).value
    with pytest.raises(DivergentError):
        sp.lorentz_norm(fn.RadialPower(1.0, 3), 3, 2)


@pytest.mark.parametrize("f", [DISK, fn.GaussianBump((0.0, 0.0, 0.0), 0.7), fn.RadialPower(0.5, 3, None, 1.0),
                               fn.RadialPower(0.5, 2, 0.1, 2.0), fn.SpacedBallsG(2, 2)])
@pytest.mark.parametrize("p", [2.0, 3.5])
def test_lorentz_diagonal_is_scaled_lebesgue(f, p):
    # layer cake: int t^p lambda(t) dt/t = ||f||_p^p / p
    a = sp.lorentz_norm(f, p, p).value
    b = sp.lebesgue_norm(f, p).value * p ** (-1 / p)
    assert a == pytest.approx(b, rel=1e-7)


def test_lorentz_monotone_in_r():
    f = fn.GaussianBump((0.0, 0.0), 1.0)
    vals = [sp.lorentz_norm(f, 3, r).value for r in (1, 2, 4, 8)]
    ratios = [b / a for a, b in zip(vals, vals[1:])]
    assert all(0.1 < x < 10 for x in ratios)


def test_local_morrey_type_examples():
    v = sp.local_morrey_type_norm(DISK, 2, 1, 1)
    assert v.value == pytest.approx(2 * math.pi, rel=1e-14)
    v = sp.local_morrey_type_norm(DISK, 4, 2, INF)
    assert v.value == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    with pytest.raises(MorreyHeatError):
        sp.local_morrey_type_norm(DISK, 2, 2, 1)


def test_local_morrey_type_divergence_direction():
    with pytest.raises(DivergentError) as exc:
        sp.local_morrey_type_norm(fn.RadialPower(1.0, 2), 2, 1, 1)
    assert exc.value.direction in ("t->0", "t->inf")


def test_spaced_balls_bounded_in_J():
    vals = [sp.local_morrey_type_norm(fn.SpacedBallsG(J, 2), 2.5, 1.5, 1).value for J in (1, 2, 3, 4, 5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    gaps = np.diff(vals)
    assert np.all(gaps[1:] < 0.5 * gaps[:-1])


def test_spaced_balls_global_attained_at_origin():
    g = fn.SpacedBallsG(3, 2)
    loc = sp.local_morrey_type_norm(g, 2.5, 1.5, 1)
    glob = sp.global_morrey_type_norm(g, 2.5, 1.5, 1)
    assert glob.value == pytest.approx(loc.value, rel=1e-12)
    assert np.allclose(glob.sup_witness[0], 0.0)


def test_morrey_examples():
    v = sp.morrey_norm(DISK, 4, 2)
    assert v.value == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert np.allclose(v.sup_witness[0], 0.0) and v.sup_witness[1] == pytest.approx(1.0)
    moved = fn.translate(DISK, (3.7, -1.2))
    assert sp.morrey_norm(moved, 4, 2).value == pytest.approx(v.value, rel=1e-12)


@pytest.mark.parametrize("n, p, q", [(3, 2.0, 1.0), (2, 4.0, 2.0), (3, 6.0, 1.5)])
def test_morrey_critical_power(n, p, q):
    # profile is constant in the radius: (v_n / (1 - q/p))^{1/q}
    v = sp.morrey_norm(fn.RadialPower(n / p, n), p, q).value
    assert v == pytest.approx((fn.unit_ball_volume(n) / (1 - q / p)) ** (1 / q), rel=1e-10)


def test_global_examples():
    v = sp.global_morrey_type_norm(DISK, 2, 1, 1)
    assert v.value == pytest.approx(2 * math.pi, rel=1e-14)
    assert np.allclose(v.sup_witness[0], 0.0)


@pytest.mark.parametrize("f, p, q", CORPUS)
def test_global_infinite_r_is_morrey(f, p, q):
    assert sp.global_morrey_type_norm(f, p, q, INF).value == sp.morrey_norm(f, p, q).value


@pytest.mark.parametrize("f, p, q", CORPUS)
def test_chebyshev(f, p, q):
    assert sp.weak_lebesgue_norm(f, p).value <= sp.lebesgue_norm(f, p).value * (1 + 1e-12)


@pytest.mark.parametrize("f, p, q", CORPUS)
@pytest.mark.parametrize("c", [-2.5, 0.3, 7.0])
def test_homogeneity(f, p, q, c):
    g = fn.Scaled(c, f)
    pairs = [
        (sp.lebesgue_norm(g, p), sp.lebesgue_norm(f, p)),
        (sp.weak_lebesgue_norm(g, p), sp.weak_lebesgue_norm(f, p)),
        (sp.lorentz_norm(g, p, 2), sp.lorentz_norm(f, p, 2)),
        (sp.morrey_norm(g, p, q), sp.morrey_norm(f, p, q)),
        (sp.local_morrey_type_norm(g, p, q, 2), sp.local_morrey_type_norm(f, p, q, 2)),
    ]
    for a, b in pairs:
        tol = 1e-10 if b.method == sp.CLOSED else 1e-5
        assert a.value == pytest.approx(abs(c) * b.value, rel=tol)


@pytest.mark.parametrize("f, p, q", CORPUS)
@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_dilation_law(f, p, q, lam):
    n = fn.dim(f)
    a = sp.morrey_norm(fn.dilate(f, lam), p, q).value
    b = sp.morrey_norm(f, p, q).value
    assert a == pytest.approx(lam ** (-n / p) * b, rel=1e-6)


@pytest.mark.parametrize("f, p, q", [c for c in CORPUS if c[2] > 1])
@pytest.mark.parametrize("r", [1.0, 2.0, INF])
def test_holder_between_q(f, p, q, r):
    n = fn.dim(f)
    q2 = 1.0
    lhs = sp.local_morrey_type_norm(f, p, q2, r).value
    rhs = sp.local_morrey_type_norm(f, p, q, r).value
    assert lhs <= fn.unit_ball_volume(n) ** (1 / q2 - 1 / q) * rhs * (1 + 1e-8)


@pytest.mark.parametrize("f, p, q", CORPUS)
def test_nesting_in_r_has_bounded_ratio(f, p, q):
    vals = [sp.local_morrey_type_norm(f, p, q, r).value for r in (1.0, 2.0, 4.0, INF)]
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            assert vals[j] / vals[i] < 10.0


def test_discrete_norms_match_continuous():
    vals = np.array([3.0, 1.0, 2.0])
    w = np.array([0.5, 1.0, 2.0])
    assert sp.discrete_norms(vals, w, 2) == pytest.approx(math.sqrt(9 * 0.5 + 1 + 8))
    # lambda(t): t<1 -> 3.5, t<2 -> 2.5, t<3 -> 0.5 ; weak sup at t -> level^-
    weak = max(1 * 3.5 ** 0.5, 2 * 2.5 ** 0.5, 3 * 0.5 ** 0.5)
    assert sp.discrete_norms(vals, w, 2, "weak") == pytest.approx(weak)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(2.2, 6.0))
def test_ball_morrey_translation_and_radius(radius, vx, vy, p):
    f = fn.indicator_ball((vx, vy), radius)
    v = sp.morrey_norm(f, p, 2.0).value
    assert v == pytest.approx(math.sqrt(math.pi) * radius ** (2 / p), rel=1e-9)
