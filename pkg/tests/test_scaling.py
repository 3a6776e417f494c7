import math

import pytest
from hypothesis import given, settings, strategies as st

from morreyheat.errors import DegenerateEndpointError, InadmissibleError, MorreyHeatError
from morreyheat.scaling import (
    INF, SpaceParams, admissibility_window, fine_index, is_inf, select_endpoints, smoothing_exponent,
)


def test_window_examples():
    w = admissibility_window(SpaceParams(3, 3, 2, gamma=1))
    assert (w.lower, w.upper, w.admissible) == pytest.approx((0.5, 2.0, True))
    w = admissibility_window(SpaceParams(2, 2, 2, gamma=0))
    assert (w.lower, w.upper) == (0.0, 1.0) and not w.admissible
    w = admissibility_window(SpaceParams(4, 4, 2, gamma=1.5))
    assert (w.lower, w.upper, w.admissible) == (1.0, 3.0, True)


def test_window_target_claims():
    w = admissibility_window(SpaceParams(3, 3, 2, s=2, gamma=1))
    assert w.weak_claim and not w.strong_claim
    w = admissibility_window(SpaceParams(3, 3, 2, s=6, gamma=1))
    assert w.weak_claim and w.strong_claim


@pytest.mark.parametrize("kw, expected", [
    (dict(n=3, p=3, s=6, gamma=1), -0.75),
    (dict(n=2, p=4, s=8, gamma=0.5), -0.375),
    (dict(n=3, p=3, s=6, gamma=1, k=1, alpha_order=2), -2.75),
])
def test_smoothing_exponent(kw, expected):
    assert smoothing_exponent(SpaceParams(q=1, **kw)) == pytest.approx(expected, abs=1e-15)


def test_endpoints_example_four_dimensional():
    e = select_endpoints(SpaceParams(4, 4, 2, s=3, gamma=1.5))
    assert (e.p0, e.p1, e.theta) == pytest.approx((8.0, 1.6, 0.25), abs=1e-14)
    assert e.check(4, 3)


def test_endpoints_example_three_dimensional():
    e = select_endpoints(SpaceParams(3, 4, 2, s=5, gamma=1))
    assert e.p0 == pytest.approx(6.0) and e.p1 == pytest.approx(1.5)
    assert e.theta == pytest.approx((0.25 - 1 / 6) / (2 / 3 - 1 / 6))
    assert max(e.residuals) <= 1e-12 and e.check(4, 5)


def test_endpoints_boundary_is_inadmissible():
    with pytest.raises(InadmissibleError):
        select_endpoints(SpaceParams(2, 2, 1, gamma=1))


def test_endpoints_degenerate_when_gamma_reaches_n_over_q():
    # q = 2, n = 4, p = 8: window (1.5, 3.5) contains gamma = n/q = 2
    with pytest.raises(DegenerateEndpointError):
        select_endpoints(SpaceParams(4, 8, 2, s=3, gamma=2.0))


def test_params_validation():
    for bad in (dict(p=1.0), dict(q=0.5), dict(q=4.0), dict(gamma=-1.0)):
        with pytest.raises(MorreyHeatError):
            SpaceParams(**{"n": 3, "p": 3.0, **bad})
    with pytest.raises(MorreyHeatError):
        SpaceParams(n=0, p=2)


def test_fine_index_sentinel():
    assert fine_index("inf") is INF and fine_index(math.inf) is INF and is_inf(INF)
    assert fine_index("2") == 2.0
    with pytest.raises(MorreyHeatError):
        fine_index(0.5)
    assert SpaceParams(2, 2).to_json()["r"] == "inf"


@st.composite
def admissible(draw):
    n = draw(st.integers(1, 6))
    q = draw(st.floats(1.0001, 6.0))
    p = draw(st.floats(q * 1.001, 12.0))
    lo, hi = n / q - n / p, min(n - n / p, n / q)
    u = draw(st.floats(0.01, 0.99))
    gamma = lo + u * (hi - lo)
    s = draw(st.floats(q, 30.0))
    return SpaceParams(n, p, q, s=s, gamma=gamma)


@settings(max_examples=200, deadline=None)
@given(admissible())
def test_endpoint_identities_property(params):
    e = select_endpoints(params)
    assert e.check(params.p, params.s, 1e-12)


@settings(max_examples=100, deadline=None)
@given(admissible(), st.floats(0.01, 1.0))
def test_exponent_decreasing_in_gamma(params, dg):
    a = smoothing_exponent(params)
    b = smoothing_exponent(params.replace(gamma=params.gamma + dg))
    c = smoothing_exponent(params.replace(k=params.k + 1))
    d = smoothing_exponent(params.replace(alpha_order=params.alpha_order + 1))
    assert b < a and c < a and d < a


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.floats(1.0, 5.0), st.floats(1.0, 3.0))
def test_window_width(n, q, extra):
    p = q * extra
    if p <= 1:
        return
    w = admissibility_window(SpaceParams(n, p, q))
    assert w.upper - w.lower == pytest.approx(n - n / q, abs=1e-12)
