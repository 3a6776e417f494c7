import math

import numpy as np
import pytest

from morreyheat import functions as fn
from morreyheat import spaces as sp
from morreyheat import verify as vf
from morreyheat.errors import DivergentError, InadmissibleError, MorreyHeatError
from morreyheat.scaling import INF, SpaceParams

BASE = SpaceParams(3, 3, 2, INF, 6, 1.0)
T5 = (0.25, 0.5, 1.0, 2.0, 4.0)


def test_fit_recovers_synthetic_exponent():
    t = np.geomspace(0.1, 10, 7)
    for E, c in ((-0.75, 3.0), (1.3, 0.2), (-2.75, 11.0)):
        fit = vf.fit_decay(t, c * t ** E, E)
        assert fit.slope == pytest.approx(E, abs=1e-10)
        assert fit.intercept == pytest.approx(math.log(c), abs=1e-10)
        assert fit.residual >= 0 and fit.residual < 1e-10


def test_fit_rejects_bad_samples():
    with pytest.raises(MorreyHeatError):
        vf.fit_decay([1, 2], [1, 2])
    with pytest.raises(MorreyHeatError):
        vf.fit_decay([1, 3, 2], [1, 2, 3])


def test_homogeneous_decay_example():
    rep = vf.run_decay_experiment(fn.RadialPower(1.0, 3), BASE, T5)
    assert rep.verdict == vf.PASS
    assert rep.fit["slope"] == pytest.approx(-0.75, abs=0.02)
    assert rep.details["rule"] == "homogeneous"


def test_ball_decay_upper_bound():
    rep = vf.run_decay_experiment(fn.indicator_ball((0.0, 0.0, 0.0)), BASE, T5)
    assert rep.verdict == vf.PASS
    assert rep.details["large_t_slope"] <= -0.75 + 0.05


def test_inadmissible_gamma():
    with pytest.raises(InadmissibleError, match="inadmissible parameters"):
        vf.run_decay_experiment(fn.RadialPower(1.0, 3), BASE.replace(gamma=2.5), T5)


def test_intercept_tracks_rescaling():
    f = fn.RadialPower(1.0, 3)
    a = vf.run_decay_experiment(f, BASE, (0.5, 1.0, 2.0))
    b = vf.run_decay_experiment(fn.Scaled(-4.0, f), BASE, (0.5, 1.0, 2.0))
    assert b.fit["intercept"] - a.fit["intercept"] == pytest.approx(math.log(4.0), abs=1e-9)


def test_determinism():
    f = fn.RadialPower(1.0, 3)
    a = vf.run_decay_experiment(f, BASE, (0.5, 1.0, 2.0)).to_json()
    b = vf.run_decay_experiment(f, BASE, (0.5, 1.0, 2.0)).to_json()
    assert a == b


def test_parallel_matches_serial():
    f = fn.RadialPower(1.0, 3)
    a = vf.run_decay_experiment(f, BASE, (0.5, 1.0, 2.0))
    b = vf.run_decay_experiment(f, BASE, (0.5, 1.0, 2.0), vf.Settings(workers=3))
    assert a.samples == b.samples


def test_verdict_monotone_under_loosening():
    f = fn.indicator_ball((0.0, 0.0, 0.0))
    tight = vf.Settings(ratio_tol=1e-9, slope_tol=1e-9, upper_slack=-0.2)
    loose = vf.Settings(ratio_tol=0.5, slope_tol=0.5, upper_slack=0.5)
    for src in (f, fn.RadialPower(1.0, 3)):
        order = {vf.FAIL: 0, vf.PASS: 1}
        a = vf.run_decay_experiment(src, BASE, (0.5, 1.0, 2.0, 4.0), tight).verdict
        b = vf.run_decay_experiment(src, BASE, (0.5, 1.0, 2.0, 4.0)).verdict
        c = vf.run_decay_experiment(src, BASE, (0.5, 1.0, 2.0, 4.0), loose).verdict
        assert order[a] <= order[b] <= order[c]


def test_identity_examples():
    disk = fn.indicator_ball((0.0, 0.0))
    rep = vf.check_identity_lemma(disk, 2.0)
    assert rep.passed
    assert rep.details["lhs"] == pytest.approx(2 * math.pi, rel=1e-12)
    assert rep.details["relative_difference"] < 1e-10
    q = vf.check_identity_lemma(disk, 2.0, route="quadrature")
    assert q.passed and q.details["relative_difference"] <= 1e-3
    assert vf.check_identity_lemma(fn.zero_function(2), 2.0).passed


def test_identity_gaussian_two_routes():
    g = fn.GaussianBump((0.0, 0.0, 0.0), 0.5)
    a = vf.check_identity_lemma(g, 2.0)
    b = vf.check_identity_lemma(g, 2.0, route="quadrature")
    assert a.passed and b.passed
    assert a.details["lhs"] == pytest.approx(b.details["lhs"], rel=1e-6)
    assert a.details["rhs"] == pytest.approx(b.details["rhs"], rel=1e-6)


def test_identity_divergent_side_named():
    with pytest.raises(DivergentError, match="divergent side"):
        vf.check_identity_lemma(fn.RadialPower(0.5, 1), 2.0)


def test_counterexample_examples():
    rep = vf.run_counterexample([0, 4], 2.0, 1.0, 1)
    rows = rep.details["rows"]
    assert rows[0]["weak"] == pytest.approx(math.sqrt(2), rel=1e-12)
    assert rows[1]["weak"] == pytest.approx(math.sqrt(18), rel=1e-12)
    assert all(math.isfinite(r["morrey"]) for r in rows)


def test_counterexample_geometric_differences():
    rep = vf.run_counterexample(range(2, 7), 2.0, 1.0, 1)
    assert rep.passed
    for ratio in rep.details["difference_ratios"]:
        assert ratio == pytest.approx(10 ** -0.5, rel=0.05)
    for r in rep.details["rows"]:
        assert r["morrey"] <= r["bound"]
        assert np.allclose(r["witness"], 0.0)


def test_counterexample_bound_dominates_every_J():
    for n, p, q in ((1, 2.0, 1.0), (2, 3.0, 1.5)):
        for J in range(0, 5):
            val = sp.local_morrey_type_norm(fn.SpacedBallsG(J, n), p, q, 1.0).value
            # J = 0 is the single ball, where the bound is attained
            assert val <= vf.counterexample_bound(J, p, q, n) * (1 + 1e-12)


def test_embedding_corpus():
    for n, p, q, r in ((2, 3.0, 1.5, 2.0), (3, 2.0, 1.0, 1.0), (2, 4.0, 2.0, INF)):
        rep = vf.check_embedding(vf.embedding_corpus(n, p), p, q, r)
        assert rep.passed
        assert rep.details["C_fit"] > 0


def test_embedding_properness_witness():
    p, q = 2.0, 1.0
    lor = [sp.lorentz_norm(fn.SpacedBallsG(J, 1), p, 1.0).value for J in (1, 3, 5)]
    mor = [sp.global_morrey_type_norm(fn.SpacedBallsG(J, 1), p, q, 1.0).value for J in (1, 3, 5)]
    # disjoint indicators: L^{p,1} value is the measure to the 1/p
    assert lor == pytest.approx([math.sqrt(2 * (2 * J + 1)) for J in (1, 3, 5)], rel=1e-12)
    assert mor[2] / mor[1] < 1.02


def test_embedding_zero():
    rep = vf.check_embedding([fn.zero_function(2)], 3.0, 1.5, 2.0)
    assert rep.passed and rep.details["C_fit"] == 0.0


def test_scan_examples():
    rep = vf.scan_region(3, 3.0, 2.0, 6.0, [0.25, 0.5, 1.0, 1.9, 2.0, 2.5])
    adm = [r["gamma"] for r in rep.details["rows"] if r["admissible"]]
    assert adm == [1.0, 1.9]
    for r in rep.details["rows"]:
        if r["admissible"]:
            assert r["slope"] == pytest.approx(r["theoretical"], abs=0.02)
    assert rep.passed
    empty = vf.scan_region(3, 3.0, 2.0, 6.0, [])
    assert empty.details["rows"] == [] and empty.verdict == vf.INCONCLUSIVE


def test_report_round_trip():
    rep = vf.run_decay_experiment(fn.RadialPower(1.0, 3), BASE, (0.5, 1.0, 2.0))
    again = vf.Report.from_json(rep.to_json())
    assert again.to_json() == rep.to_json()
    rows = vf.Report.samples_from_csv(rep.to_csv())
    assert [r["t"] for r in rows] == [0.5, 1.0, 2.0]
    for a, b in zip(rows, rep.samples):
        assert a["norm"] == pytest.approx(b["norm"], rel=1e-11)
    d = rep.to_dict()
    for key in ("experiment", "params", "input", "samples", "fit", "verdict", "settings"):
        assert key in d
    assert set(d["fit"]) >= {"slope", "intercept", "residual"}
    assert d["params"]["r"] == "inf"


def test_report_validation():
    good = vf.check_identity_lemma(fn.indicator_ball((0.0, 0.0)), 2.0).to_dict()
    with pytest.raises(MorreyHeatError):
        vf.Report.from_dict({k: v for k, v in good.items() if k != "verdict"})
    with pytest.raises(MorreyHeatError):
        vf.Report.from_dict({**good, "verdict": "maybe"})


def test_settings_round_trip():
    s = vf.Settings(slope_tol=0.03, t_grid=(1.0, 2.0, 4.0))
    assert vf.Settings.from_dict(s.to_dict()) == s
