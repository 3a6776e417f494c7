"""Experiments: decay-exponent fits, the origin identity, the spaced-balls
counterexample, embedding spot checks and admissibility scans.

Every experiment returns a :class:`Report` whose JSON form is stable and can
be read back with :meth:`Report.from_json`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import _quadrature as quad
from . import functions as fn
from . import heat, spaces
from .errors import DivergentError, InadmissibleError, MorreyHeatError, NonIntegrableError
from .scaling import INF, SpaceParams, admissibility_window, fine_index, is_inf, smoothing_exponent

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


def default_t_grid() -> list:
    return [2.0 ** k for k in range(-4, 5)]


@dataclass(frozen=True)
class Settings:
    """Pass thresholds and grids; every experiment echoes these into its report."""

    ratio_tol: float = 0.01          # normalised decay ratio constant to 1%
    slope_tol: float = 0.02          # homogeneous slope vs theory, absolute
    upper_slack: float = 0.05        # generic sources: slope <= theory + slack
    morrey_change: float = 0.02      # counterexample: last two Morrey-type values
    weak_tol: float = 1e-10          # counterexample: weak norm vs exact formula
    identity_closed_tol: float = 1e-6
    identity_quad_tol: float = 1e-3
    embedding_spread: float = 0.10   # fitted constant stable under dilation
    t_grid: tuple = tuple(default_t_grid())
    scan_t_grid: tuple = (0.5, 1.0, 2.0)
    workers: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t_grid"] = list(self.t_grid)
        d["scan_t_grid"] = list(self.scan_t_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Settings":
        names = {f.name for f in fields(cls)}
        kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items() if k in names}
        return cls(**kw)


@dataclass(frozen=True)
class DecayFit:
    t_samples: tuple
    norm_samples: tuple
    slope: float
    intercept: float
    residual: float
    theoretical: Optional[float] = None

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual,
                "theoretical": self.theoretical}


def fit_decay(t_samples, norm_samples, theoretical: Optional[float] = None) -> DecayFit:
    """Least-squares fit of ``log N = slope * log t + intercept``."""
    t = np.asarray(t_samples, dtype=float)
    y = np.asarray(norm_samples, dtype=float)
    if t.size < 3 or y.shape != t.shape:
        raise MorreyHeatError("a decay fit needs at least 3 matching samples")
    if np.any(np.diff(t) <= 0):
        raise MorreyHeatError("t samples must be strictly increasing")
    if np.any(y <= 0):
        raise MorreyHeatError("norm samples must be positive for a log-log fit")
    lt, ly = np.log(t), np.log(y)
    slope, intercept = np.polyfit(lt, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lt + intercept))))
    return DecayFit(tuple(t.tolist()), tuple(y.tolist()), float(slope), float(intercept), residual, theoretical)


@dataclass
class Report:
    experiment: str
    params: dict
    input: object
    samples: list = field(default_factory=list)
    fit: Optional[dict] = None
    verdict: str = INCONCLUSIVE
    settings: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=lambda: {"tool": "morreyheat", "version": __version__})

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        missing = [k for k in ("experiment", "params", "input", "samples", "fit", "verdict", "settings") if k not in d]
        if missing:
            raise MorreyHeatError(f"report is missing keys: {', '.join(missing)}")
        if d["verdict"] not in (PASS, FAIL, INCONCLUSIVE):
            raise MorreyHeatError(f"unknown verdict {d['verdict']!r}")
        for s in d["samples"]:
            if set(s) != {"t", "norm", "error"}:
                raise MorreyHeatError("every sample needs exactly the keys t, norm, error")
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "norm", "error"])
        for s in self.samples:
            w.writerow([_fmt(s["t"]), _fmt(s["norm"]), _fmt(s["error"])])
        return buf.getvalue()

    @staticmethod
    def samples_from_csv(text: str) -> list:
        rows = list(csv.DictReader(io.StringIO(text)))
        return [{"t": float(r["t"]), "norm": float(r["norm"]), "error": float(r["error"])} for r in rows]


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _jsonable(obj):
    if obj is INF:
        return "inf"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(_fmt(v))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _map(func, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# ---------------------------------------------------------------------------
# decay experiments
# ---------------------------------------------------------------------------


def _homogeneous_order(f) -> Optional[float]:
    """Degree ``a`` when ``f = c |x|^{-a}`` on all of ``R^n``; else ``None``."""
    _, base = fn._unscale(f)
    if isinstance(base, fn.RadialPower) and base.inner_cut is None and base.outer_cut is None:
        return base.a
    return None


def default_target(params: SpaceParams) -> heat.Target:
    """Strong ``L^s`` when ``q < s``; weak ``L^{s,inf}`` when ``q = s``."""
    return heat.Target("lebesgue" if params.q < params.s else "weak", params.s)


def run_decay_experiment(f, params: SpaceParams, t_grid: Optional[Sequence[float]] = None,
                         settings: Optional[Settings] = None, target=None) -> Report:
    settings = settings or Settings()
    window = admissibility_window(params)
    if not window.admissible:
        raise InadmissibleError(
            f"inadmissible parameters: gamma={params.gamma} outside ({window.lower:.6g}, {window.upper:.6g})")
    if params.q > params.s:
        raise InadmissibleError(f"inadmissible parameters: q={params.q} exceeds s={params.s}")
    ts = sorted(float(t) for t in (t_grid if t_grid is not None else settings.t_grid))
    settings = replace(settings, t_grid=tuple(ts))  # the report echoes the grid actually used
    target = heat.Target.parse(target) if isinstance(target, str) else (target or default_target(params))
    alpha = heat._alpha_tuple(params.alpha_order, params.n)
    expo = smoothing_exponent(params)

    def one(t):
        fld = heat.apply_weighted_heat(f, params.gamma, t, params.k, alpha)
        return heat.heat_norm(fld, target)

    norms = _map(one, ts, settings.workers)
    samples = [{"t": t, "norm": v.value, "error": v.error} for t, v in zip(ts, norms)]
    vals = [v.value for v in norms]
    details = {"target": {"kind": target.kind, "p": target.p, "r": target.r},
               "theoretical": expo, "alpha": list(alpha)}
    if all(v == 0 for v in vals):
        fit, verdict = None, PASS
        details["rule"] = "zero source"
        return _report("decay", params, f, samples, fit, verdict, settings, details)
    fitted = fit_decay(ts, vals, expo)
    a = _homogeneous_order(f)
    if a is not None and math.isclose(a, params.n / params.p, rel_tol=1e-12):
        ratios = [v * t ** (-expo) for t, v in zip(ts, vals)]
        spread = max(ratios) / min(ratios) - 1.0
        ok = spread <= settings.ratio_tol and abs(fitted.slope - expo) <= settings.slope_tol
        details.update(rule="homogeneous", ratio_spread=spread, normalized=ratios)
        fit = fitted
    else:
        upper = len(ts) // 2
        tail = fit_decay(ts[upper:], vals[upper:], expo) if len(ts) - upper >= 3 else fitted
        ok = tail.slope <= expo + settings.upper_slack
        details.update(rule="upper-bound", large_t_slope=tail.slope, large_t_from=ts[upper])
        fit = fitted
    return _report("decay", params, f, samples, fit.to_dict(), PASS if ok else FAIL, settings, details)


def _report(name, params, f, samples, fit, verdict, settings, details) -> Report:
    pj = params.to_json() if isinstance(params, SpaceParams) else params
    return Report(name, pj, fn.to_json(f) if f is not None else None, samples,
                  fit.to_dict() if isinstance(fit, DecayFit) else fit, verdict, settings.to_dict(), details)


# ---------------------------------------------------------------------------
# origin identity
# ---------------------------------------------------------------------------


def _mass_by_rays(f, t: float) -> float:
    n = fn.dim(f)
    m_ang = {1: 2, 2: 64, 3: 24}.get(n)
    if m_ang is None:
        raise MorreyHeatError(f"quadrature route is limited to n <= 3, got n={n}")
    return fn._polar_ball(f, np.zeros(n), t, 1.0, m_ang, m_rad=16)


def identity_lhs_quadrature(f, p: float) -> float:
    """``int_0^inf t^{n/p-n} |B(0,t) cap f|_1 dt/t`` by Gauss rules in ``log t``.

    The ball integrals use polar rays; the ``t`` integral runs over geometric
    panels from ``1e-6 L`` to the support radius, with exact remainders at
    both ends (``f`` is bounded near 0 or ``|f| ~ |x|^{-b}``; beyond the
    support the mass is constant).
    """
    n = fn.dim(f)
    a = n / p - n
    L = fn._length_scale(f)
    R = fn._effective_radius(f, 1.0)
    if not math.isfinite(R):
        raise DivergentError("quadrature route needs a source of bounded extent", "t->inf")
    b = fn._origin_order(f)
    lo = 1e-6 * min(L, R)
    breaks = [lo, R]
    u = fn._as_union(fn._innermost(f))
    if isinstance(u, fn.IndicatorBallUnion):
        for c, r in u.balls:
            d = float(np.linalg.norm(c))
            breaks += [v for v in (d - r, d + r) if lo < v < R]
    breaks = sorted(set(breaks))
    edges = np.concatenate([quad.log_panels(x, y, 4.0)[:-1] for x, y in zip(breaks[:-1], breaks[1:])] + [[R]])
    logs = np.log(edges)
    x, w = quad.panel_nodes(logs, 8)
    ts = np.exp(x)
    masses = np.array([_mass_by_rays(f, t) for t in ts])
    total = float(np.dot(w, ts ** a * masses))
    m_lo = _mass_by_rays(f, lo)
    total += m_lo * lo ** a / (a + n - b)          # head: mass ~ t^{n-b}
    total += _mass_by_rays(f, R) * R ** a / (-a)   # tail: constant mass
    return total


def check_identity_lemma(f, p: float, settings: Optional[Settings] = None, route: str = "closed") -> Report:
    """Compare ``||f||_{LM^p_{1,1}}`` with ``(n-n/p)^{-1} int |f| |x|^{-(n-n/p)}``.

    ``route="closed"`` uses the exact mass-profile and radial paths when
    available; ``route="quadrature"`` computes both sides with the polar
    ray quadrature instead.
    """
    settings = settings or Settings()
    n = fn.dim(f)
    if not p > 1:
        raise MorreyHeatError("p must exceed 1")
    kappa = n - n / p
    params = SpaceParams(n, p, 1.0, 1.0)
    if fn.is_zero(f):
        details = {"lhs": 0.0, "rhs": 0.0, "relative_difference": 0.0, "route": route}
        return _report("identity", params, f, [], None, PASS, settings, details)
    sides = {}
    try:
        if route == "closed":
            lhs = spaces.local_morrey_type_norm(f, p, 1.0, 1.0)
            sides["lhs"], lhs_method = lhs.value, lhs.method
        else:
            sides["lhs"], lhs_method = identity_lhs_quadrature(f, p), spaces.QUAD
    except (DivergentError, NonIntegrableError) as exc:
        raise DivergentError(f"divergent side: left ({exc})", getattr(exc, "direction", None)) from None
    try:
        weighted = fn.Weighted(kappa, f)
        if route == "closed":
            val, err = fn.total_integral(weighted, 1.0)
        else:
            R = fn._effective_radius(f, 1.0)
            val, err = fn.ball_integral(weighted, np.zeros(n), R * (1 + 1e-9), 1.0, method="quadrature")
        sides["rhs"] = val / kappa
        rhs_method = spaces.CLOSED if err == 0 and route == "closed" else spaces.QUAD
    except (DivergentError, NonIntegrableError) as exc:
        raise DivergentError(f"divergent side: right ({exc})", getattr(exc, "direction", None)) from None
    lhs, rhs = sides["lhs"], sides["rhs"]
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    exact = lhs_method == spaces.CLOSED and rhs_method == spaces.CLOSED
    tol = settings.identity_closed_tol if exact else settings.identity_quad_tol
    details = {"lhs": lhs, "rhs": rhs, "relative_difference": rel, "tolerance": tol,
               "lhs_method": lhs_method, "rhs_method": rhs_method, "route": route}
    return _report("identity", params, f, [], None, PASS if rel <= tol else FAIL, settings, details)


# ---------------------------------------------------------------------------
# spaced-balls counterexample
# ---------------------------------------------------------------------------


def counterexample_bound(J: int, p: float, q: float, n: int) -> float:
    """Upper bound for the origin-centred Morrey-type (r=1) norm of ``g_J``.

    Splitting the radius axis at 1 and at ``10^j - 1``: on ``(0, 1]`` the mass
    is at most ``v_n t^n``; on ``[10^j - 1, 10^{j+1} - 1)`` at most
    ``(2j+1) v_n``.  Summing ``int t^a dt/t`` over these ranges gives
    ``C (1 + sum_j (2j+1)^{1/q} 10^{ja})`` with
    ``C = v_n^{1/q} max(p/n + 1/|a|, 0.9^a/|a|)`` and ``a = n/p - n/q``.
    """
    a = n / p - n / q
    vn = fn.unit_ball_volume(n)
    C = vn ** (1.0 / q) * max(p / n + 1.0 / abs(a), 0.9 ** a / abs(a))
    return C * (1.0 + sum((2 * j + 1) ** (1.0 / q) * 10.0 ** (j * a) for j in range(1, J + 1)))


def run_counterexample(J_list: Sequence[int], p: float, q: float, n: int,
                       settings: Optional[Settings] = None) -> Report:
    settings = settings or Settings()
    if not (1 <= q < p):
        raise MorreyHeatError(f"counterexample needs 1 <= q < p, got q={q}, p={p}")
    Js = sorted(int(j) for j in J_list)
    if not Js:
        raise MorreyHeatError("J list is empty")
    params = SpaceParams(n, p, q, 1.0)
    vn = fn.unit_ball_volume(n)
    rows = []
    for J in Js:
        g = fn.SpacedBallsG(J, n)
        fn._as_union(g)  # disjointness is asserted on construction
        weak = spaces.weak_lebesgue_norm(g, p)
        exact = ((2 * J + 1) * vn) ** (1.0 / p)
        morrey = spaces.global_morrey_type_norm(g, p, q, 1.0)
        local = spaces.local_morrey_type_norm(g, p, q, 1.0)
        rows.append({"J": J, "weak": weak.value, "weak_exact": exact,
                     "weak_rel_err": abs(weak.value - exact) / exact,
                     "morrey": morrey.value, "morrey_error": morrey.error, "morrey_local": local.value,
                     "witness": list(morrey.sup_witness[0]) if morrey.sup_witness else None,
                     "bound": counterexample_bound(J, p, q, n)})
    weak_ok = all(r["weak_rel_err"] <= settings.weak_tol for r in rows)
    increasing = all(b["weak"] > a["weak"] for a, b in zip(rows, rows[1:]))
    below = all(r["morrey"] <= r["bound"] for r in rows[-2:])
    change = None
    if len(rows) >= 2:
        change = abs(rows[-1]["morrey"] - rows[-2]["morrey"]) / rows[-1]["morrey"]
        stable = change < settings.morrey_change
    else:
        stable = True
    diffs = [b["morrey"] - a["morrey"] for a, b in zip(rows, rows[1:])]
    ratios = [d2 / d1 for d1, d2 in zip(diffs, diffs[1:]) if d1 != 0]
    details = {"rows": rows, "final_change": change, "difference_ratios": ratios,
               "expected_ratio": 10.0 ** (n / p - n / q),
               "checks": {"weak_exact": weak_ok, "weak_increasing": increasing,
                          "morrey_stable": stable, "below_bound": below}}
    verdict = PASS if (weak_ok and increasing and stable and below) else FAIL
    samples = [{"t": float(r["J"]), "norm": r["morrey"], "error": r["morrey_error"]} for r in rows]
    return _report("counterexample", params, None, samples, None, verdict, settings, details)


# ---------------------------------------------------------------------------
# embedding spot check
# ---------------------------------------------------------------------------


def embedding_corpus(n: int, p: float) -> list:
    """Ball indicator, centred Gaussian and a cut-off ``|x|^{-n/p}`` annulus."""
    return [fn.indicator_ball((0.0,) * n), fn.GaussianBump((0.0,) * n, 1.0),
            fn.RadialPower(n / p, n, 0.5, 2.0)]


def check_embedding(functions, p: float, q: float, r, settings: Optional[Settings] = None,
                    dilations: Sequence[float] = (0.5, 1.0, 2.0)) -> Report:
    """Ratios Morrey-type / Lorentz over a corpus and its dilates.

    Both norms scale like ``lambda^{-n/p}`` under ``f -> f(lambda x)``, so the
    fitted constant of each member must be stable under dilation; the
    reported ``C_fit`` is the largest ratio seen.
    """
    settings = settings or Settings()
    r = fine_index(r)
    if not q < p:
        raise MorreyHeatError(f"embedding check needs q < p, got q={q}, p={p}")
    members = list(functions) if isinstance(functions, (list, tuple)) else [functions]
    n = fn.dim(members[0])
    rows, ok = [], True
    for f in members:
        ratios = []
        for lam in dilations:
            g = fn.dilate(f, lam) if lam != 1.0 else f
            lor = spaces.lorentz_norm(g, p, r).value
            mor = spaces.global_morrey_type_norm(g, p, q, r).value
            if lor == 0 and mor == 0:
                continue
            if lor == 0 or not math.isfinite(mor):
                ok = False
                ratios.append(math.inf)
                continue
            ratios.append(mor / lor)
        spread = (max(ratios) / min(ratios) - 1.0) if ratios and min(ratios) > 0 else 0.0
        member_ok = all(math.isfinite(x) for x in ratios) and spread <= settings.embedding_spread
        ok = ok and member_ok
        rows.append({"input": fn.to_json(f) if not isinstance(f, fn.GridSample) else "GridSample",
                     "ratios": ratios, "spread": spread, "ok": member_ok})
    finite = [x for row in rows for x in row["ratios"] if math.isfinite(x)]
    details = {"rows": rows, "C_fit": max(finite) if finite else 0.0, "dilations": list(dilations)}
    params = SpaceParams(n, p, q, r)
    return _report("embedding", params, None, [], None, PASS if ok else FAIL, settings, details)


# ---------------------------------------------------------------------------
# admissibility scan
# ---------------------------------------------------------------------------


def scan_region(n: int, p: float, q: float, s: float, gamma_grid: Sequence[float],
                settings: Optional[Settings] = None) -> Report:
    settings = settings or Settings()
    base = SpaceParams(n, p, q, INF, s)
    rows = []
    for gamma in gamma_grid:
        params = base.replace(gamma=float(gamma))
        window = admissibility_window(params)
        row = {"gamma": float(gamma), "admissible": window.admissible,
               "theoretical": smoothing_exponent(params), "slope": None, "ok": None}
        if window.admissible and q <= s:
            rep = run_decay_experiment(fn.RadialPower(n / p, n), params, settings.scan_t_grid, settings)
            row["slope"] = rep.fit["slope"]
            row["ok"] = abs(row["slope"] - row["theoretical"]) <= settings.slope_tol
        rows.append(row)
    checked = [r["ok"] for r in rows if r["ok"] is not None]
    verdict = INCONCLUSIVE if not rows else (PASS if all(checked) else FAIL)
    details = {"rows": rows, "window": [n / q - n / p, n - n / p]}
    return _report("scan", base, None, [], None, verdict, settings, details)


__all__ = [
    "Settings", "DecayFit", "Report", "fit_decay", "default_t_grid", "default_target",
    "run_decay_experiment", "check_identity_lemma", "identity_lhs_quadrature",
    "counterexample_bound", "run_counterexample", "embedding_corpus", "check_embedding",
    "scan_region", "PASS", "FAIL", "INCONCLUSIVE",
]
