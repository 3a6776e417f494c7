"""Norm engines: Lebesgue, weak Lebesgue, Lorentz, Morrey and Morrey-type.

All engines consume the primitives of :mod:`morreyheat.functions`.  Where the
mass profile ``t -> int_{B(x,t)} |f|^q`` or the distribution function has a
closed form the result is exact (``method="closed-form"``, ``error=0``);
otherwise integrals over the radius or level variable are evaluated
numerically on the analytic pieces between breakpoints.

Lorentz norms follow the level-set definition literally::

    ||f||_{L^{p,r}} = ( int_0^inf [t * |{|f| > t}|^{1/p}]^r dt/t )^{1/r}

which differs from the rearrangement-normalised norm by a constant factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy import integrate, optimize, special

from . import _quadrature as quad
from . import functions as fn
from .errors import (
    DivergentError,
    InfiniteMeasureError,
    MorreyHeatError,
    NonIntegrableError,
    UnboundedError,
    UnsupportedError,
)
from .scaling import INF, fine_index, is_inf

CLOSED = "closed-form"
QUAD = "quadrature"
GRID = "grid"
SUP = "sup-search"

MAX_GRID_CENTERS = 64


@dataclass(frozen=True)
class NormValue:
    value: float
    error: float = 0.0
    method: str = CLOSED
    sup_witness: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error", float(self.error))
        if self.value < 0 or self.error < 0:
            raise MorreyHeatError("norm values and errors are non-negative")
        if self.method == CLOSED and self.error != 0:
            object.__setattr__(self, "error", 0.0)

    def __float__(self):
        return float(self.value)

    def scaled(self, c: float) -> "NormValue":
        return NormValue(abs(c) * self.value, abs(c) * self.error, self.method, self.sup_witness)


def _worst(*methods):
    order = [CLOSED, GRID, QUAD, SUP]
    return max(methods, key=order.index)


# ---------------------------------------------------------------------------
# discrete measures: values with cell weights
# ---------------------------------------------------------------------------


def discrete_norms(values, weights, p: float, kind: str = "lebesgue", r=INF) -> float:
    """Norms of the step function taking ``|values[i]|`` on a set of measure ``weights[i]``.

    ``kind`` is ``"lebesgue"``, ``"weak"`` or ``"lorentz"`` (with fine index ``r``).
    All three are exact for this representation.
    """
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    w = np.broadcast_to(np.asarray(weights, dtype=float), v.shape).ravel()
    keep = (v > 0) & (w > 0)
    v, w = v[keep], w[keep]
    if v.size == 0:
        return 0.0
    if kind == "lebesgue":
        vmax = v.max()
        return float(vmax * np.dot(w, (v / vmax) ** p) ** (1.0 / p))
    order = np.argsort(-v, kind="stable")
    v, W = v[order], np.cumsum(w[order])
    r = fine_index(r) if kind == "lorentz" else INF
    if kind == "weak" or is_inf(r):
        return float(np.max(v * W ** (1.0 / p)))
    if kind != "lorentz":
        raise MorreyHeatError(f"unknown norm kind {kind!r}")
    vmax = v[0]
    nxt = np.append(v[1:], 0.0) / vmax
    total = np.sum(W ** (r / p) * ((v / vmax) ** r - nxt ** r)) / r
    return float(vmax * total ** (1.0 / r))


# ---------------------------------------------------------------------------
# Lebesgue, weak Lebesgue, Lorentz
# ---------------------------------------------------------------------------


def lebesgue_norm(f, p: float) -> NormValue:
    if p < 1:
        raise MorreyHeatError("p must be >= 1")
    val, err = fn.total_integral(f, p)
    method = GRID if isinstance(fn._unscale(f)[1], fn.GridSample) else (CLOSED if err == 0 else QUAD)
    root = val ** (1.0 / p)
    rel = err / val if val > 0 else 0.0
    return NormValue(root, root * rel / p, method)


def weak_lebesgue_norm(f, p: float) -> NormValue:
    return _level_norm(f, p, INF)


def lorentz_norm(f, p: float, r) -> NormValue:
    """``L^{p,r}`` norm; ``r = INF`` is the weak Lebesgue norm."""
    return _level_norm(f, p, fine_index(r))


def _level_norm(f, p, r) -> NormValue:
    if p < 1:
        raise MorreyHeatError("p must be >= 1")
    if fn.is_zero(f):
        return NormValue(0.0)
    c, base = fn._unscale(f)
    n = fn.dim(base)
    if isinstance(base, (fn.IndicatorBallUnion, fn.SpacedBallsG)):
        m = fn.total_integral(base, 1.0)[0]
        val = m ** (1.0 / p) if is_inf(r) else m ** (1.0 / p) * r ** (-1.0 / r)
        return NormValue(c * val)
    if isinstance(base, fn.GridSample):
        kind = "weak" if is_inf(r) else "lorentz"
        return NormValue(c * discrete_norms(base.values, base.cell_volume, p, kind, r), 0.0, GRID)
    if isinstance(base, fn.GaussianBump):
        base = fn.GaussianBump((0.0,) * n, base.width)
    prof = fn.radial_profile(base)
    if prof is None:
        raise UnsupportedError(f"level-set norms of {type(base).__name__} away from the origin")
    return radial_level_norm(prof, p, r).scaled(c)


def radial_level_norm(prof: fn.RadialProfile, p: float, r, method: str = "auto") -> NormValue:
    """Weak/Lorentz norm of an origin-radial non-increasing profile.

    ``method="search"`` skips every closed form and uses the numeric routes.
    """
    n, A, a, w, lo, hi = prof.n, prof.A, prof.a, prof.w, prof.lo, prof.hi
    vn = fn.unit_ball_volume(n)
    closed = method == "auto"

    def big_lambda(rho):
        return vn * (rho ** n - lo ** n)

    if not prof.decreasing:
        if math.isinf(hi):
            raise InfiniteMeasureError("constant profile on an unbounded set")
        val = A * big_lambda(hi) ** (1.0 / p)
        return NormValue(val if is_inf(r) else val * r ** (-1.0 / r))

    crit = n / p
    if is_inf(r):
        if w is None and closed:
            return NormValue(_power_weak(A, a, lo, hi, n, p, vn))
        if w is not None and a == 0 and lo == 0 and math.isinf(hi) and closed:
            u = n / (2.0 * p)
            return NormValue(A * (vn * (4.0 * w * u) ** (n / 2.0)) ** (1.0 / p) * math.exp(-u))
        return _radial_weak_search(prof, p, big_lambda)

    # finite r: levels below phi(hi) see the full support, the rest maps to rho in (lo, hi)
    total = 0.0
    if math.isfinite(hi):
        total += float(prof.value(hi * (1 - 1e-15))) ** r * big_lambda(hi) ** (r / p) / r
    if lo == 0 and a >= crit:
        raise DivergentError("level integral diverges as t -> inf", "t->inf")
    if math.isinf(hi) and w is None and a <= crit:
        raise DivergentError("level integral diverges as t -> 0", "t->0")
    if w is None and lo == 0 and closed:
        e = r * (crit - a)
        total += a * A ** r * vn ** (r / p) * hi ** e / e
        return NormValue(total ** (1.0 / r))
    if w is not None and a == 0 and lo == 0 and math.isinf(hi) and closed:
        m = n * r / (2.0 * p)
        log_val = (r * math.log(A) + (r / p) * math.log(vn * (4.0 * w) ** (n / 2.0))
                   + special.gammaln(1.0 + m) - (1.0 + m) * math.log(r))
        return NormValue(math.exp(log_val / r))

    def integrand(u):
        if u > 700:
            return 0.0
        rho = math.exp(u)
        phi = float(prof.value(rho))
        if phi == 0.0:
            return 0.0
        lam = big_lambda(rho)
        if lam <= 0:
            return 0.0
        return (phi * lam ** (1.0 / p)) ** r * float(prof.log_derivative(rho)) * rho

    u_lo = math.log(lo) if lo > 0 else -np.inf
    u_hi = math.log(hi) if math.isfinite(hi) else np.inf
    if w is not None and math.isinf(hi):
        u_hi = math.log(math.sqrt(4.0 * w * (750.0 + r * n)))
    val, err = integrate.quad(integrand, u_lo, u_hi, epsabs=0.0, epsrel=1e-12, limit=400)
    total += val
    root = total ** (1.0 / r)
    return NormValue(root, root * err / max(total, 1e-300) / r, QUAD)


def _power_weak(A, a, lo, hi, n, p, vn):
    crit = n / p
    cands = []
    if lo == 0:
        if a == crit:
            return A * vn ** (1.0 / p)
        if a > crit:
            raise UnboundedError("weak norm is infinite: |x|^-a too singular at the origin")
        if math.isinf(hi):
            raise UnboundedError("weak norm is infinite: |x|^-a decays too slowly")
        return A * hi ** (-a) * (vn * hi ** n) ** (1.0 / p)
    if math.isfinite(hi):
        cands.append(A * hi ** (-a) * (vn * (hi ** n - lo ** n)) ** (1.0 / p))
    elif a < crit:
        raise UnboundedError("weak norm is infinite: |x|^-a decays too slowly")
    elif a == crit:
        cands.append(A * vn ** (1.0 / p))
    if a > crit:
        rho = lo * (a / (a - crit)) ** (1.0 / n)
        if rho < hi:
            cands.append(A * rho ** (-a) * (vn * (rho ** n - lo ** n)) ** (1.0 / p))
    return max(cands) if cands else 0.0


def _radial_weak_search(prof, p, big_lambda):
    n, a, lo, hi = prof.n, prof.a, prof.lo, prof.hi
    if lo == 0 and a > n / p:
        raise UnboundedError("weak norm is infinite near the origin")
    scale = math.sqrt(prof.w) if prof.w is not None else (lo or (hi if math.isfinite(hi) else 1.0))
    rlo = lo if lo > 0 else 1e-6 * scale
    rhi = hi if math.isfinite(hi) else 1e3 * max(scale, rlo)

    def g(u):
        rho = math.exp(u)
        return float(prof.value(min(rho, hi * (1 - 1e-15)))) * max(big_lambda(rho), 0.0) ** (1.0 / p)

    best, u_best, err = _grid_argmax(g, math.log(rlo), math.log(rhi))
    return NormValue(best, err, SUP, ("rho", math.exp(u_best)))


def _grid_argmax(g, u_lo, u_hi, points: int = 200):
    """Maximise ``g`` on ``[u_lo, u_hi]``: grid then bounded golden-section refinement."""
    us = np.linspace(u_lo, u_hi, points)
    vals = np.array([g(u) for u in us])
    k = int(np.argmax(vals))
    a, b = us[max(k - 1, 0)], us[min(k + 1, points - 1)]
    best, u_best = vals[k], us[k]
    if b > a:
        res = optimize.minimize_scalar(lambda u: -g(u), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12 * max(1.0, abs(a))})
        if -res.fun > best:
            best, u_best = -res.fun, res.x
    spread = abs(best - vals[k])
    return float(best), float(u_best), float(spread * 1e-3)


# ---------------------------------------------------------------------------
# Morrey-type functionals over a mass profile
# ---------------------------------------------------------------------------


def _exponent(law, a, q):
    return a + law.expo / q


def profile_rmean(prof: fn.MassProfile, n, p, q, r):
    """``(integral, error, exact)`` for ``int_0^inf [t^{n/p-n/q} I(t)^{1/q}]^r dt/t``."""
    a = n / p - n / q
    head, tail = prof.head, prof.tail
    total, err, exact = 0.0, 0.0, prof.exact

    def g(t):
        t = np.asarray(t, dtype=float)
        m = np.maximum(prof(t), 0.0)
        return t ** (a * r) * m ** (r / q)

    if head is not None and tail is not None and head.edge >= tail.edge and head.coef > 0:
        e = _exponent(head, a, q)
        if head.edge == math.inf and tail.edge == 0.0:
            raise DivergentError("single power law on (0, inf): Morrey-type integral diverges",
                                 "t->0" if e <= 0 else "t->inf")
    start = stop = None
    if head is not None:
        start = head.edge
        if head.coef > 0:
            e = _exponent(head, a, q)
            if e <= 0:
                raise DivergentError("Morrey-type integral diverges as t -> 0", "t->0")
            if math.isinf(head.edge):
                raise DivergentError("Morrey-type integral diverges as t -> inf", "t->inf")
            total += head.coef ** (r / q) * head.edge ** (e * r) / (e * r)
    if tail is not None:
        stop = max(tail.edge, start or 0.0)
        if tail.coef > 0:
            e = _exponent(tail, a, q)
            if e >= 0:
                raise DivergentError("Morrey-type integral diverges as t -> inf", "t->inf")
            total += tail.coef ** (r / q) * stop ** (e * r) / (-e * r)
    inner = [b for b in prof.breaks if (start is None or b > start) and (stop is None or b < stop)]
    if start is None:
        # begin a decade below the feature scale so the sweep sees the asymptotic regime
        first = min(inner[0] if inner else (stop if stop else prof.scale), 0.1 * prof.scale)
        val, e_err = _dyadic_tail(g, first, toward_zero=True)
        total += val
        err += e_err
        exact = False
        start = first
    if stop is None:
        last = max(inner[-1] if inner else start, 10.0 * prof.scale)
        val, e_err = _dyadic_tail(g, last, toward_zero=False)
        total += val
        err += e_err
        exact = False
        stop = last
    edges = [start] + [b for b in inner if start < b < stop] + [stop]
    numeric = False
    for u, v in zip(edges[:-1], edges[1:]):
        if v <= u:
            continue
        val, e_err = _piece(g, u, v)
        numeric = True
        total += val
        err += e_err
    return total, err, exact and not numeric


def _piece(g, u, v):
    val, e_err = quad.integrate_log_piece(g, u, v, m=16, ratio=1.5)
    if e_err <= 1e-13 * abs(val) + 1e-300:
        return val, e_err
    res, qerr = integrate.quad(lambda s: float(g(np.exp([s]))[0]), math.log(u), math.log(v),
                               epsabs=1e-15 * abs(val), epsrel=1e-12, limit=200)
    return res, max(qerr, 1e-15 * abs(res))


def _dyadic_tail(g, start, toward_zero):
    """Integrate ``g dt/t`` from ``start`` toward 0 or infinity by doubling the range.

    Converges when successive increments shrink geometrically (the geometric
    remainder is added); declared divergent when two consecutive doublings
    each grow the partial value by more than 1% without geometric decay.
    """
    step = 0.5 if toward_zero else 2.0
    t = start
    partial, incs, growth_hits = 0.0, [], 0
    for _ in range(400):
        nxt = t * step
        lo, hi = (nxt, t) if toward_zero else (t, nxt)
        inc, _ = quad.integrate_log_piece(g, lo, hi, m=16, ratio=2.0)
        incs.append(inc)
        partial += inc
        t = nxt
        if len(incs) >= 3 and incs[-2] > 0:
            ratio = incs[-1] / incs[-2]
            prev = incs[-2] / incs[-3] if incs[-3] > 0 else ratio
            if ratio < 0.98 and abs(ratio - prev) < 1e-7 * max(1.0, ratio):
                rest = incs[-1] * ratio / (1.0 - ratio)
                return float(partial + rest), float(abs(rest) * 1e-6 + 1e-16 * partial)
        if partial == 0.0 and inc == 0.0 and len(incs) > 4:
            return 0.0, 0.0
        if partial > 0 and inc > 0.01 * partial and len(incs) >= 3 and incs[-1] >= 0.98 * incs[-2]:
            growth_hits += 1
            if growth_hits >= 2:
                raise DivergentError("Morrey-type integral diverges", "t->0" if toward_zero else "t->inf")
        else:
            growth_hits = 0
    raise DivergentError("Morrey-type integral did not settle", "t->0" if toward_zero else "t->inf")


def profile_sup(prof: fn.MassProfile, n, p, q):
    """``(sup, error, t_star, exact)`` of ``t^{n/p-n/q} I(t)^{1/q}`` over ``t > 0``."""
    a = n / p - n / q
    head, tail = prof.head, prof.tail

    def g(t):
        t = np.asarray(t, dtype=float)
        return t ** a * np.maximum(prof(t), 0.0) ** (1.0 / q)

    cands = []  # (value, t)
    start = stop = None
    if head is not None:
        start = head.edge
        if head.coef > 0:
            e = _exponent(head, a, q)
            c = head.coef ** (1.0 / q)
            if e < 0:
                raise UnboundedError("Morrey profile unbounded as t -> 0")
            if e == 0:
                cands.append((c, min(head.edge, 1.0)))
            elif math.isinf(head.edge):
                raise UnboundedError("Morrey profile unbounded as t -> inf")
            else:
                cands.append((c * head.edge ** e, head.edge))
    if tail is not None:
        stop = max(tail.edge, start or 0.0)
        if tail.coef > 0:
            e = _exponent(tail, a, q)
            c = tail.coef ** (1.0 / q)
            if e > 0:
                raise UnboundedError("Morrey profile unbounded as t -> inf")
            if stop > 0:
                cands.append((c * stop ** e, stop))
            elif e == 0:
                cands.append((c, 1.0))
    exact = prof.exact
    inner = [b for b in prof.breaks if (start is None or b > start) and (stop is None or b < stop)]
    lo_edge = start if start is not None else 1e-4 * prof.scale
    hi_edge = stop if stop is not None else 1e4 * max(prof.scale, lo_edge)
    if start is None or stop is None:
        exact = False
    edges = [lo_edge] + [b for b in inner if lo_edge < b < hi_edge] + [hi_edge]
    err = 0.0
    for b in edges:
        if b > 0 and math.isfinite(b):
            cands.append((float(g([b])[0]), b))
    for u, v in zip(edges[:-1], edges[1:]):
        if not (v > u > 0) or not math.isfinite(v):
            continue
        pts = 200 if (start is None or stop is None) and len(edges) == 2 else 24
        best, ub, e_err = _grid_argmax(lambda s: float(g([math.exp(s)])[0]), math.log(u), math.log(v), pts)
        cands.append((best, math.exp(ub)))
        err = max(err, e_err)
        exact = False
    if not cands:
        return 0.0, 0.0, None, True
    val, t_star = max(cands, key=lambda c: c[0])
    return val, err, t_star, exact


# ---------------------------------------------------------------------------
# Morrey and Morrey-type norms
# ---------------------------------------------------------------------------


def _check_exponents(p, q, r):
    if not (1 <= q <= p):
        raise MorreyHeatError(f"need 1 <= q <= p, got q={q}, p={p}")
    if not is_inf(r) and q >= p:
        raise MorreyHeatError("finite fine index needs q < p (the space is trivial otherwise)")


def _at_center(f, center, p, q, r) -> NormValue:
    n = fn.dim(f)
    prof = fn.mass_profile(f, center, q)
    grid = bool(prof.meta.get("grid"))
    if is_inf(r):
        val, err, t_star, exact = profile_sup(prof, n, p, q)
        method = GRID if grid else (CLOSED if exact else QUAD)
        return NormValue(val, err, method, (tuple(float(c) for c in center), t_star))
    total, err, exact = profile_rmean(prof, n, p, q, r)
    root = total ** (1.0 / r)
    rel = err / total if total > 0 else 0.0
    method = GRID if grid else (CLOSED if exact else QUAD)
    return NormValue(root, root * rel / r, method, (tuple(float(c) for c in center), None))


def local_morrey_type_norm(f, p: float, q: float, r) -> NormValue:
    """Morrey-type norm over balls centred at the origin only."""
    r = fine_index(r)
    _check_exponents(p, q, r)
    if fn.is_zero(f):
        return NormValue(0.0)
    return _at_center(f, np.zeros(fn.dim(f)), p, q, r)


def candidate_centers(f) -> np.ndarray:
    """Origin, ball and bump centres, pairwise midpoints of those, and grid cell centres."""
    n = fn.dim(f)
    pts = [np.zeros(n)]
    base = fn._innermost(f)
    if isinstance(base, (fn.IndicatorBallUnion, fn.SpacedBallsG)):
        cs = [np.array(c) for c, _ in fn._as_union(base).balls]
        pts += cs
        pts += [(u + v) / 2.0 for u, v in combinations(cs, 2)]
    elif isinstance(base, fn.GaussianBump):
        pts.append(np.array(base.center))
    elif isinstance(base, fn.GridSample):
        cells = base.cell_centers()
        mags = np.abs(base.values.ravel())
        order = np.argsort(-mags, kind="stable")[:MAX_GRID_CENTERS]
        pts += [cells[i] for i in order if mags[i] > 0]
    arr = np.unique(np.round(np.array(pts), 12), axis=0)
    # origin first so ties resolve to it
    origin = np.all(arr == 0, axis=1)
    return np.concatenate([arr[origin], arr[~origin]])


def global_morrey_type_norm(f, p: float, q: float, r) -> NormValue:
    """Supremum over candidate centres of the Morrey-type quantity.

    The true supremum runs over all of R^n; the value returned is the largest
    candidate, i.e. a certified lower bound, and is tagged ``sup-search``
    whenever more than one centre was examined.
    """
    r = fine_index(r)
    _check_exponents(p, q, r)
    if fn.is_zero(f):
        return NormValue(0.0)
    centers = candidate_centers(f)
    best = None
    for x in centers:
        cur = _at_center(f, x, p, q, r)
        if best is None or cur.value > best.value:
            best = cur
    method = best.method if len(centers) == 1 else SUP
    return NormValue(best.value, best.error, method, best.sup_witness)


def morrey_norm(f, p: float, q: float) -> NormValue:
    return global_morrey_type_norm(f, p, q, INF)


__all__ = [
    "NormValue", "discrete_norms", "lebesgue_norm", "weak_lebesgue_norm", "lorentz_norm",
    "radial_level_norm", "local_morrey_type_norm", "global_morrey_type_norm", "morrey_norm",
    "candidate_centers", "profile_rmean", "profile_sup", "NonIntegrableError",
]
