"""Representable functions on R^n and their measure-theoretic primitives.

A function is one of a small closed family of immutable records.  On top of
pointwise evaluation this module provides the two quantities every norm in
:mod:`morreyheat.spaces` is built from:

* ``ball_integral``: ``int_{B(x,R)} |f|^q``, closed form where one exists;
* ``distribution``: the measure of the super-level set ``{|f| > t}``.

``mass_profile`` packages ``t -> int_{B(x,t)} |f|^q`` together with its
breakpoints and any exact power-law behaviour near ``t = 0`` and ``t = inf``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy import optimize, special, stats

from . import _quadrature as quad
from .errors import (
    InfiniteMeasureError,
    MorreyHeatError,
    NonIntegrableError,
    OverlapError,
    SingularPointError,
    UnsupportedError,
)

# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def unit_ball_volume(n: int) -> float:
    if n <= 1:
        return 2.0 if n == 1 else 1.0
    return 2.0 * math.pi / n * unit_ball_volume(n - 2)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (``2`` when ``n = 1``)."""
    return n * unit_ball_volume(n)


def _phi_minus_sin(phi):
    phi = np.asarray(phi, dtype=float)
    small = phi < 1e-2
    p2 = phi * phi
    series = phi * p2 / 6.0 * (1 - p2 / 20.0 * (1 - p2 / 42.0 * (1 - p2 / 72.0)))
    return np.where(small, series, phi - np.sin(phi))


def cap_volume(n: int, R, h, method: str = "auto"):
    """Volume of the cap of height ``h`` (``0 <= h <= 2R``) cut from a ball of radius ``R``.

    ``method="explicit"`` uses the elementary formulas (n <= 3),
    ``method="beta"`` the regularized incomplete beta function (any n).
    """
    R = np.asarray(R, dtype=float)
    h = np.clip(np.asarray(h, dtype=float), 0.0, 2.0 * R)
    if method == "auto":
        method = "explicit" if n <= 3 else "beta"
    if method == "explicit":
        if n == 1:
            return h + 0.0 * R
        if n == 2:
            phi = 4.0 * np.arcsin(np.sqrt(np.clip(h / (2.0 * R), 0.0, 1.0)))
            return 0.5 * R * R * _phi_minus_sin(phi)
        if n == 3:
            return math.pi * h * h * (3.0 * R - h) / 3.0
        raise UnsupportedError(f"explicit cap formula only for n <= 3, got n={n}")
    vn = unit_ball_volume(n)
    hh = np.minimum(h, 2.0 * R - h)
    x = np.clip(hh * (2.0 * R - hh) / (R * R), 0.0, 1.0)
    small = 0.5 * vn * R ** n * special.betainc((n + 1) / 2.0, 0.5, x)
    return np.where(h <= R, small, vn * R ** n - small)


def lens_volume(n: int, R1, R2, d, method: str = "auto"):
    """Volume of ``B(c1, R1) ∩ B(c2, R2)`` with ``|c1 - c2| = d`` (vectorised)."""
    R1, R2, d = np.broadcast_arrays(
        np.asarray(R1, dtype=float), np.asarray(R2, dtype=float), np.asarray(d, dtype=float)
    )
    vn = unit_ball_volume(n)
    out = np.zeros(R1.shape)
    rmin = np.minimum(R1, R2)
    inside = d <= np.abs(R1 - R2)
    out[inside] = vn * rmin[inside] ** n
    part = (~inside) & (d < R1 + R2)
    if np.any(part):
        a, b, dd = R1[part], R2[part], d[part]
        s = a + b - dd
        # subtract the radii first: exact when they are (nearly) equal
        h1 = s * ((b - a) + dd) / (2.0 * dd)
        h2 = s * ((a - b) + dd) / (2.0 * dd)
        out[part] = cap_volume(n, a, h1, method) + cap_volume(n, b, h2, method)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------


def _tuple(v):
    return tuple(float(c) for c in np.atleast_1d(np.asarray(v, dtype=float)))


@dataclass(frozen=True)
class RadialPower:
    """``|x|^{-a}`` restricted to the annulus ``inner_cut < |x| < outer_cut``."""

    a: float
    n: int
    inner_cut: Optional[float] = None
    outer_cut: Optional[float] = None

    def __post_init__(self):
        if self.a < 0:
            raise MorreyHeatError(f"decay exponent a must be >= 0, got {self.a}")
        if self.inner_cut is not None and self.inner_cut < 0:
            raise MorreyHeatError("inner_cut must be non-negative")
        if self.outer_cut is not None and self.outer_cut <= (self.inner_cut or 0.0):
            raise MorreyHeatError("outer_cut must exceed inner_cut")
        if self.inner_cut == 0:
            object.__setattr__(self, "inner_cut", None)


@dataclass(frozen=True)
class GaussianBump:
    """``exp(-|x - center|^2 / (4 width))``."""

    center: tuple
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", _tuple(self.center))
        if not self.width > 0:
            raise MorreyHeatError(f"width must be positive, got {self.width}")


@dataclass(frozen=True)
class IndicatorBallUnion:
    """Indicator of a union of pairwise disjoint balls ``((center, radius), ...)``."""

    balls: tuple

    def __post_init__(self):
        balls = tuple((_tuple(c), float(r)) for c, r in self.balls)
        object.__setattr__(self, "balls", balls)
        if not balls:
            raise MorreyHeatError("IndicatorBallUnion needs at least one ball")
        dims = {len(c) for c, _ in balls}
        if len(dims) != 1:
            raise MorreyHeatError("all ball centers must share one dimension")
        if any(r <= 0 for _, r in balls):
            raise MorreyHeatError("ball radii must be positive")
        centers = np.array([c for c, _ in balls])
        radii = np.array([r for _, r in balls])
        for i in range(len(balls)):
            dist = np.linalg.norm(centers[i + 1:] - centers[i], axis=1)
            if np.any(dist < radii[i + 1:] + radii[i]):
                raise OverlapError("balls of an IndicatorBallUnion must be pairwise disjoint")


@dataclass(frozen=True)
class SpacedBallsG:
    """Unit balls at the origin and at ``±10^j e_1`` for ``j = 1..J``."""

    J: int
    n: int

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 0:
            raise MorreyHeatError(f"J must be a non-negative integer, got {self.J}")
        if self.n < 1:
            raise MorreyHeatError("n must be positive")

    def as_union(self) -> IndicatorBallUnion:
        return IndicatorBallUnion(tuple(zip(self.centers(), [1.0] * (2 * self.J + 1))))

    def centers(self):
        out = [(0.0,) * self.n]
        for j in range(1, self.J + 1):
            for sign in (1.0, -1.0):
                out.append((sign * 10.0 ** j,) + (0.0,) * (self.n - 1))
        return out


@dataclass(frozen=True, eq=False)
class GridSample:
    """Piecewise-constant function on cells ``origin + h*[i, i+1)``; zero outside."""

    origin: tuple
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", _tuple(self.origin))
        if len(self.origin) != values.ndim:
            raise MorreyHeatError("origin dimension must match values.ndim")
        if not self.spacing > 0:
            raise MorreyHeatError("spacing must be positive")
        if not np.all(np.isfinite(values)):
            raise MorreyHeatError("grid values must be finite")

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.values.ndim

    def cell_centers(self) -> np.ndarray:
        axes = [self.origin[i] + self.spacing * (np.arange(m) + 0.5) for i, m in enumerate(self.values.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


@dataclass(frozen=True)
class Weighted:
    """``|x|^{-gamma} * inner(x)``."""

    gamma: float
    inner: "FunctionRep"

    def __post_init__(self):
        if self.gamma < 0:
            raise MorreyHeatError("gamma must be >= 0")


@dataclass(frozen=True)
class Scaled:
    """``factor * inner(x)``; lets homogeneity be checked on every variant."""

    factor: float
    inner: "FunctionRep"


FunctionRep = Union[RadialPower, GaussianBump, IndicatorBallUnion, SpacedBallsG, GridSample, Weighted, Scaled]


def dim(f) -> int:
    if isinstance(f, (RadialPower, SpacedBallsG)):
        return f.n
    if isinstance(f, GaussianBump):
        return len(f.center)
    if isinstance(f, IndicatorBallUnion):
        return len(f.balls[0][0])
    if isinstance(f, GridSample):
        return f.values.ndim
    if isinstance(f, (Weighted, Scaled)):
        return dim(f.inner)
    raise UnsupportedError(f"unknown function representation {type(f).__name__}")


def indicator_ball(center, radius=1.0) -> IndicatorBallUnion:
    return IndicatorBallUnion(((tuple(center), radius),))


def _as_union(f):
    if isinstance(f, SpacedBallsG):
        return f.as_union()
    return f


def zero_function(n: int) -> GridSample:
    return GridSample((0.0,) * n, 1.0, np.zeros((1,) * n))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _origin_order(f) -> float:
    """Exponent ``s`` with ``|f(x)| ~ |x|^{-s}`` near the origin (0 when bounded there)."""
    if isinstance(f, RadialPower):
        return f.a if f.inner_cut is None else 0.0
    if isinstance(f, Weighted):
        if not _touches_origin(f.inner):
            return 0.0
        return f.gamma + _origin_order(f.inner)
    if isinstance(f, Scaled):
        return 0.0 if f.factor == 0 else _origin_order(f.inner)
    return 0.0


def _touches_origin(f) -> bool:
    if isinstance(f, RadialPower):
        return f.inner_cut is None
    if isinstance(f, GaussianBump):
        return True
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        return any(np.linalg.norm(c) <= r for c, r in _as_union(f).balls)
    if isinstance(f, GridSample):
        lo = np.array(f.origin)
        hi = lo + f.spacing * np.array(f.values.shape)
        return bool(np.all(lo <= 0) and np.all(hi >= 0))
    return _touches_origin(f.inner)


def _eval(f, X: np.ndarray) -> np.ndarray:
    """Vectorised evaluation at the rows of ``X`` (no singularity checks)."""
    if isinstance(f, RadialPower):
        r = np.linalg.norm(X, axis=1)
        with np.errstate(divide="ignore"):
            out = r ** (-f.a)
        mask = np.ones_like(r, dtype=bool)
        if f.inner_cut is not None:
            mask &= r > f.inner_cut
        if f.outer_cut is not None:
            mask &= r < f.outer_cut
        return np.where(mask, out, 0.0)
    if isinstance(f, GaussianBump):
        d2 = np.sum((X - np.array(f.center)) ** 2, axis=1)
        return np.exp(-d2 / (4.0 * f.width))
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        out = np.zeros(len(X))
        for c, r in _as_union(f).balls:
            out[np.sum((X - np.array(c)) ** 2, axis=1) < r * r] = 1.0
        return out
    if isinstance(f, GridSample):
        idx = np.floor((X - np.array(f.origin)) / f.spacing).astype(np.int64)
        shape = np.array(f.values.shape)
        ok = np.all((idx >= 0) & (idx < shape), axis=1)
        out = np.zeros(len(X))
        if np.any(ok):
            out[ok] = f.values[tuple(idx[ok].T)]
        return out
    if isinstance(f, Weighted):
        r = np.linalg.norm(X, axis=1)
        inner = _eval(f.inner, X)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = r ** (-f.gamma) if f.gamma else np.ones_like(r)
            out = w * inner
        return np.where(inner == 0, 0.0, out)
    if isinstance(f, Scaled):
        return f.factor * _eval(f.inner, X)
    raise UnsupportedError(f"unknown function representation {type(f).__name__}")


def evaluate(f, x):
    """Value of ``f`` at a point (shape ``(n,)``) or at each row of an ``(m, n)`` array."""
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1
    X = np.atleast_2d(X.reshape(1, -1) if single else X)
    n = dim(f)
    if X.shape[1] != n:
        raise MorreyHeatError(f"point has dimension {X.shape[1]}, function has {n}")
    if _origin_order(f) > 0 and np.any(np.all(X == 0.0, axis=1)):
        raise SingularPointError("evaluation at the singular point x = 0")
    out = _eval(f, X)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# origin-radial profiles: A * rho^{-a} * [exp(-rho^2/(4w))] on (lo, hi)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    n: int
    A: float
    a: float
    w: Optional[float]
    lo: float
    hi: float

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            v = self.A * rho ** (-self.a)
            if self.w is not None:
                v = v * np.exp(-rho * rho / (4.0 * self.w))
        return np.where((rho > self.lo) & (rho < self.hi), v, 0.0)

    def log_derivative(self, rho):
        """``-phi'(rho)/phi(rho)`` inside the support."""
        rho = np.asarray(rho, dtype=float)
        out = self.a / rho
        if self.w is not None:
            out = out + rho / (2.0 * self.w)
        return out

    @property
    def decreasing(self) -> bool:
        return self.a > 0 or self.w is not None

    def radial_integral(self, q: float, upper: float, weight: float = 0.0) -> float:
        """``int_{lo}^{min(upper,hi)} rho^{n-1-weight} phi(rho)^q d rho`` (no angular factor)."""
        n = self.n
        top = min(upper, self.hi)
        if top <= self.lo:
            return 0.0
        c = n - self.a * q - weight
        lo = self.lo
        if self.w is None:
            if math.isinf(top):
                if c >= 0 or lo == 0:
                    raise NonIntegrableError("power profile not integrable at infinity")
                return self.A ** q * (-(lo ** c)) / c
            if lo == 0:
                if c <= 0:
                    raise NonIntegrableError(
                        f"|x|^(-{self.a * q + weight}) is not integrable at the origin in R^{n}"
                    )
                return self.A ** q * top ** c / c
            if c == 0:
                return self.A ** q * math.log(top / lo)
            return self.A ** q * (top ** c - lo ** c) / c
        beta = q / (4.0 * self.w)
        if c > 0:
            x_hi = beta * top * top if math.isfinite(top) else math.inf
            x_lo = beta * lo * lo
            g = special.gamma(c / 2.0)
            part = special.gammainc(c / 2.0, x_hi) - special.gammainc(c / 2.0, x_lo)
            if part < 1e-6 and x_lo > 0:
                part = special.gammaincc(c / 2.0, x_lo) - special.gammaincc(c / 2.0, x_hi)
            return self.A ** q * 0.5 * beta ** (-c / 2.0) * g * part
        if lo == 0:
            raise NonIntegrableError("weighted Gaussian profile not integrable at the origin")
        from scipy.integrate import quad as _q

        val, _ = _q(lambda r: r ** (c - 1) * math.exp(-beta * r * r), lo, top, epsabs=0, epsrel=1e-13, limit=200)
        return self.A ** q * val

    def ball_mass(self, t: float, q: float) -> float:
        return sphere_area(self.n) * self.radial_integral(q, t)

    def level_radius(self, level: float) -> float:
        """``sup{rho : phi(rho) > level}`` for the (non-increasing) profile."""
        A, a, w = self.A, self.a, self.w
        if level >= A and a == 0:
            return self.lo
        if w is None:
            if a == 0:
                return self.hi
            return (A / level) ** (1.0 / a)
        if a == 0:
            return math.sqrt(4.0 * w * math.log(A / level)) if level < A else 0.0
        target = math.log(level / A)

        def g(y):
            return -a * y - math.exp(2.0 * y) / (4.0 * w) - target

        lo_y, hi_y = -1.0, 1.0
        while g(lo_y) < 0:
            lo_y -= 2.0 * (1.0 - lo_y)
        while g(hi_y) > 0:
            hi_y += 1.0 + abs(hi_y)
        y = optimize.brentq(g, lo_y, hi_y, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        return math.exp(y)

    def distribution(self, level: float) -> float:
        top = min(self.level_radius(level), self.hi)
        if top <= self.lo:
            return 0.0
        if math.isinf(top):
            raise InfiniteMeasureError(f"super-level set at level {level} has infinite measure")
        vn = unit_ball_volume(self.n)
        return vn * (top ** self.n - self.lo ** self.n)


def radial_profile(f) -> Optional[RadialProfile]:
    """Closed radial description of ``f`` when it depends only on ``|x|``; else ``None``."""
    if isinstance(f, RadialPower):
        return RadialProfile(f.n, 1.0, f.a, None, f.inner_cut or 0.0, f.outer_cut if f.outer_cut is not None else math.inf)
    if isinstance(f, GaussianBump):
        if any(c != 0 for c in f.center):
            return None
        return RadialProfile(dim(f), 1.0, 0.0, f.width, 0.0, math.inf)
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        u = _as_union(f)
        if len(u.balls) != 1:
            return None
        c, r = u.balls[0]
        if any(v != 0 for v in c):
            return None
        return RadialProfile(len(c), 1.0, 0.0, None, 0.0, r)
    if isinstance(f, Weighted):
        inner = radial_profile(f.inner)
        if inner is None:
            return None
        return RadialProfile(inner.n, inner.A, inner.a + f.gamma, inner.w, inner.lo, inner.hi)
    if isinstance(f, Scaled):
        inner = radial_profile(f.inner)
        if inner is None or f.factor == 0:
            return None
        return RadialProfile(inner.n, inner.A * abs(f.factor), inner.a, inner.w, inner.lo, inner.hi)
    return None


def _unscale(f):
    """Split ``f`` into ``(|factor|, base)`` by peeling ``Scaled`` layers."""
    c = 1.0
    while isinstance(f, Scaled):
        c *= abs(f.factor)
        f = f.inner
    return c, f


def is_zero(f) -> bool:
    if isinstance(f, Scaled):
        return f.factor == 0 or is_zero(f.inner)
    if isinstance(f, Weighted):
        return is_zero(f.inner)
    if isinstance(f, GridSample):
        return not np.any(f.values)
    return False


# ---------------------------------------------------------------------------
# ball integrals
# ---------------------------------------------------------------------------


def _gauss_ball(f: GaussianBump, center, radius, q):
    n = dim(f)
    sigma2 = 2.0 * f.width / q
    total = (2.0 * math.pi * sigma2) ** (n / 2.0)
    off = np.linalg.norm(np.array(center) - np.array(f.center))
    if off == 0:
        frac = special.gammainc(n / 2.0, radius * radius / (2.0 * sigma2))
    else:
        frac = stats.ncx2.cdf(radius * radius / sigma2, n, off * off / sigma2)
    return total * float(frac)


def _support_radius(f) -> float:
    """Radius about the origin outside of which ``f`` vanishes (``inf`` if unbounded)."""
    if isinstance(f, RadialPower):
        return f.outer_cut if f.outer_cut is not None else math.inf
    if isinstance(f, GaussianBump):
        return math.inf
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        return max(np.linalg.norm(c) + r for c, r in _as_union(f).balls)
    if isinstance(f, GridSample):
        lo = np.array(f.origin)
        hi = lo + f.spacing * np.array(f.values.shape)
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
    return _support_radius(f.inner)


def _effective_radius(f, q: float) -> float:
    """Radius beyond which ``|f|^q`` contributes below double precision."""
    if isinstance(f, GaussianBump):
        n = dim(f)
        return float(np.linalg.norm(f.center)) + math.sqrt(4.0 * f.width * (60.0 + n) / q)
    if isinstance(f, (Weighted, Scaled)):
        return _effective_radius(f.inner, q)
    return _support_radius(f)


def _length_scale(f) -> float:
    if isinstance(f, GaussianBump):
        return math.sqrt(f.width)
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        return min(r for _, r in _as_union(f).balls)
    if isinstance(f, RadialPower):
        return f.inner_cut or f.outer_cut or 1.0
    if isinstance(f, GridSample):
        return f.spacing
    return _length_scale(f.inner)


def _ray_intervals(f, omega):
    """Parameter intervals ``rho`` along the ray ``rho*omega`` on which ``f`` is smooth and may be nonzero."""
    if isinstance(f, RadialPower):
        return [(f.inner_cut or 0.0, f.outer_cut if f.outer_cut is not None else math.inf)]
    if isinstance(f, GaussianBump):
        return [(0.0, math.inf)]
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        out = []
        for c, r in _as_union(f).balls:
            iv = _chord(np.array(c), r, omega)
            if iv is not None:
                out.append(iv)
        return sorted(out)
    if isinstance(f, GridSample):
        raise UnsupportedError("polar quadrature is not defined for grid samples")
    return _ray_intervals(f.inner, omega)


def _chord(c, R, omega):
    b = float(np.dot(omega, c))
    disc = b * b - float(np.dot(c, c)) + R * R
    if disc <= 0:
        return None
    sq = math.sqrt(disc)
    lo, hi = b - sq, b + sq
    if hi <= 0:
        return None
    return (max(lo, 0.0), hi)


def _sphere_rule(n: int, m: int):
    """Directions and weights integrating over the unit sphere in R^n."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        th = 2.0 * math.pi * (np.arange(m) + 0.5) / m
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 2.0 * math.pi / m)
    if n == 3:
        cz, wz = quad.legendre(max(m // 2, 2))
        ph = 2.0 * math.pi * (np.arange(m) + 0.5) / m
        C, P = np.meshgrid(cz, ph, indexing="ij")
        S = np.sqrt(1.0 - C * C)
        dirs = np.stack([(S * np.cos(P)).ravel(), (S * np.sin(P)).ravel(), C.ravel()], axis=1)
        w = (wz[:, None] * np.full(m, 2.0 * math.pi / m)[None, :]).ravel()
        return dirs, w
    raise UnsupportedError(f"generic quadrature is limited to n <= 3, got n={n}")


def _polar_ball(f, center, radius, q, m_ang, m_rad=24):
    n = dim(f)
    order = _origin_order(f) * q
    if order >= n and np.linalg.norm(center) <= radius:
        raise NonIntegrableError(f"|f|^{q} is not integrable at the origin in R^{n}")
    dirs, wts = _sphere_rule(n, m_ang)
    c = np.asarray(center, dtype=float)
    scale = _length_scale(f)
    eff = _effective_radius(f, q)
    pts, wsum = [], []
    for omega, wt in zip(dirs, wts):
        ball = _chord(c, radius, omega)
        if ball is None:
            continue
        for lo, hi in _ray_intervals(f, omega):
            a, b = max(lo, ball[0]), min(hi, ball[1], eff)
            if b <= a:
                continue
            start = a
            if a == 0.0 and order > 0:
                first = min(b, scale)
                x, w = quad.origin_nodes(first, n - 1 - order, m_rad)
                pts.append(x[:, None] * omega[None, :])
                wsum.append(wt * w * x ** (order - (n - 1)) * x ** (n - 1))
                start = first
            if b > start:
                panels = max(1, min(256, int(math.ceil((b - start) / scale))))
                x, w = quad.panel_nodes(np.linspace(start, b, panels + 1), m_rad)
                pts.append(x[:, None] * omega[None, :])
                wsum.append(wt * w * x ** (n - 1))
    if not pts:
        return 0.0
    vals = np.abs(_eval(f, np.concatenate(pts))) ** q
    return float(np.dot(np.concatenate(wsum), vals))


def ball_integral(f, center, radius: float, q: float = 1.0, method: str = "auto"):
    """``(value, error)`` for ``int_{B(center, radius)} |f(y)|^q dy``.

    ``method="quadrature"`` forces the generic polar quadrature (n <= 3) even
    when a closed form exists; it is the independent route used for
    cross-validation.
    """
    n = dim(f)
    center = np.asarray(center, dtype=float).reshape(n)
    if not radius > 0:
        raise MorreyHeatError("radius must be positive")
    if q < 1:
        raise MorreyHeatError("power q must be >= 1")
    if method == "quadrature":
        if n > 3:
            raise UnsupportedError(f"generic quadrature is limited to n <= 3, got n={n}")
        coarse = _polar_ball(f, center, radius, q, 128 if n == 2 else 48)
        fine = _polar_ball(f, center, radius, q, 256 if n == 2 else 96)
        return float(fine), float(abs(fine - coarse) + 1e-12 * abs(fine))
    if method != "auto":
        raise MorreyHeatError(f"unknown method {method!r}")
    if is_zero(f):
        return 0.0, 0.0
    factor, base = _unscale(f)
    if isinstance(base, (IndicatorBallUnion, SpacedBallsG)):
        u = _as_union(base)
        cs = np.array([c for c, _ in u.balls])
        rs = np.array([r for _, r in u.balls])
        d = np.linalg.norm(cs - center, axis=1)
        return factor ** q * float(np.sum(lens_volume(n, radius, rs, d))), 0.0
    if isinstance(base, GridSample):
        return _grid_ball(base, center, radius, q, factor)
    prof = radial_profile(base)
    if prof is not None and not np.any(center):
        return factor ** q * prof.ball_mass(radius, q), 0.0
    if isinstance(base, GaussianBump):
        return factor ** q * _gauss_ball(base, center, radius, q), 0.0
    val, err = ball_integral(base, center, radius, q, method="quadrature")
    return factor ** q * val, factor ** q * err


def _grid_ball(g: GridSample, center, radius, q, factor):
    cs, rs, wts = _grid_balls(g, q, factor)
    if not len(rs):
        return 0.0, 0.0
    d = np.linalg.norm(cs - center, axis=1)
    val = float(lens_volume(g.values.ndim, radius, rs, d) @ wts)
    boundary = np.abs(d - radius) <= 0.5 * g.spacing * math.sqrt(g.values.ndim)
    return val, float(np.sum(wts[boundary]) * g.cell_volume)


def total_integral(f, q: float = 1.0):
    """``(value, error)`` for ``int_{R^n} |f|^q``."""
    n = dim(f)
    if is_zero(f):
        return 0.0, 0.0
    factor, base = _unscale(f)
    if isinstance(base, (IndicatorBallUnion, SpacedBallsG)):
        vn = unit_ball_volume(n)
        return factor ** q * sum(vn * r ** n for _, r in _as_union(base).balls), 0.0
    if isinstance(base, GridSample):
        return factor ** q * float(np.sum(np.abs(base.values) ** q) * base.cell_volume), 0.0
    if isinstance(base, GaussianBump):
        return factor ** q * (4.0 * math.pi * base.width / q) ** (n / 2.0), 0.0
    prof = radial_profile(base)
    if prof is not None:
        return factor ** q * sphere_area(n) * prof.radial_integral(q, math.inf), 0.0
    R = _effective_radius(base, q)
    if not math.isfinite(R):
        raise UnsupportedError("total integral of an unbounded non-radial function")
    val, err = ball_integral(base, np.zeros(n), R * (1 + 1e-9), q, method="quadrature")
    return factor ** q * val, factor ** q * err


# ---------------------------------------------------------------------------
# distribution function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistributionProfile:
    levels: tuple
    measures: tuple
    exact: tuple


def distribution(f, level: float):
    """``(measure, exact)`` of ``{x : |f(x)| > level}``."""
    if not level > 0:
        raise MorreyHeatError("level must be positive")
    n = dim(f)
    if is_zero(f):
        return 0.0, True
    factor, base = _unscale(f)
    level = level / factor
    if isinstance(base, (IndicatorBallUnion, SpacedBallsG)):
        if level >= 1.0:
            return 0.0, True
        return total_integral(base, 1.0)[0], True
    if isinstance(base, GridSample):
        return float(np.count_nonzero(np.abs(base.values) > level) * base.cell_volume), True
    if isinstance(base, GaussianBump):
        base = GaussianBump((0.0,) * n, base.width)
    prof = radial_profile(base)
    if prof is None:
        raise UnsupportedError(f"no distribution function for {type(base).__name__} off the origin")
    m = prof.distribution(level)
    if not math.isfinite(m) or m > 1e300:
        raise InfiniteMeasureError(f"super-level set at level {level * factor} has infinite measure")
    return m, True


def distribution_profile(f, levels) -> DistributionProfile:
    levels = sorted(float(v) for v in levels)
    pairs = [distribution(f, v) for v in levels]
    return DistributionProfile(tuple(levels), tuple(m for m, _ in pairs), tuple(e for _, e in pairs))


# ---------------------------------------------------------------------------
# mass profiles t -> int_{B(x,t)} |f|^q
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLaw:
    """``coef * t**expo`` holding exactly on ``(0, edge]`` (head) or ``[edge, inf)`` (tail)."""

    edge: float
    coef: float
    expo: float


@dataclass(frozen=True, eq=False)
class MassProfile:
    func: Callable
    breaks: tuple
    head: Optional[PowerLaw]
    tail: Optional[PowerLaw]
    exact: bool
    scale: float
    meta: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))


def mass_profile(f, center, q: float = 1.0) -> MassProfile:
    n = dim(f)
    x = np.asarray(center, dtype=float).reshape(n)
    factor, base = _unscale(f)
    fq = factor ** q
    if is_zero(f):
        return MassProfile(lambda t: np.zeros_like(t), (), PowerLaw(math.inf, 0.0, 0.0), None, True, 1.0)
    if isinstance(base, (IndicatorBallUnion, SpacedBallsG)):
        return _union_profile(_as_union(base), x, fq)
    if isinstance(base, GridSample):
        return _grid_profile(base, x, q, factor)
    prof = radial_profile(base)
    if prof is not None and not np.any(x):
        return _radial_mass_profile(prof, q, fq)
    if isinstance(base, GaussianBump):
        off = float(np.linalg.norm(x - np.array(base.center)))
        edge = off + math.sqrt(4.0 * base.width * (60.0 + n) / q)
        total = (4.0 * math.pi * base.width / q) ** (n / 2.0)

        def func(t, base=base):
            t = np.atleast_1d(t)
            return fq * np.array([_gauss_ball(base, x, tt, q) if tt > 0 else 0.0 for tt in t])

        return MassProfile(func, (), None, PowerLaw(edge, fq * total, 0.0), True, math.sqrt(base.width))
    return _generic_profile(base, x, q, fq)


def _union_profile(u: IndicatorBallUnion, x, fq) -> MassProfile:
    cs = np.array([c for c, _ in u.balls])
    rs = np.array([r for _, r in u.balls])
    return _balls_profile(cs, rs, np.full(len(rs), fq), x)


def _balls_profile(cs, rs, wts, x) -> MassProfile:
    """Mass profile of ``sum_i wts[i] * indicator(B(cs[i], rs[i]))`` about ``x``."""
    n = len(x)
    d = np.linalg.norm(cs - x, axis=1)
    vn = unit_ball_volume(n)

    def func(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape)
        for k in range(0, len(t), 256):
            blk = t[k:k + 256]
            out[k:k + 256] = lens_volume(n, blk[:, None], rs[None, :], d[None, :]) @ wts
        return out

    br = np.concatenate([d - rs, d + rs])
    br = np.unique(br[br > 0])
    inside = d < rs
    edges = np.concatenate([(rs - d)[inside], (d - rs)[~inside]])
    edge = float(np.min(edges)) if edges.size else math.inf
    head = PowerLaw(edge, float(np.sum(wts[inside])) * vn, float(n)) if edge > 0 else None
    tail = PowerLaw(float(np.max(d + rs)), float(np.sum(wts * vn * rs ** n)), 0.0)
    return MassProfile(func, tuple(br), head, tail, True, float(np.min(rs)), meta={"n": n})


def _grid_balls(g: GridSample, q, factor):
    """Cells as equal-volume balls: ``(centers, radii, weights)`` for the nonzero cells."""
    n = g.values.ndim
    vals = np.abs(g.values.ravel() * factor) ** q
    keep = vals > 0
    rho = g.spacing / unit_ball_volume(n) ** (1.0 / n)
    return g.cell_centers()[keep], np.full(int(keep.sum()), rho), vals[keep]


def _radial_mass_profile(prof: RadialProfile, q, fq) -> MassProfile:
    n = prof.n
    area = sphere_area(n)

    def func(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return fq * area * np.array([prof.radial_integral(q, tt) if tt > 0 else 0.0 for tt in t])

    breaks = tuple(v for v in (prof.lo, prof.hi) if 0 < v < math.inf)
    c = n - prof.a * q
    head = tail = None
    if prof.lo > 0:
        head = PowerLaw(prof.lo, 0.0, 0.0)
    elif prof.w is None:
        if c <= 0:
            raise NonIntegrableError(f"|x|^(-{prof.a * q}) is not integrable at the origin in R^{n}")
        head = PowerLaw(prof.hi, fq * area * prof.A ** q / c, c)
    if math.isfinite(prof.hi):
        tail = PowerLaw(prof.hi, fq * area * prof.radial_integral(q, math.inf), 0.0)
    elif prof.w is not None and c > 0:
        edge = math.sqrt(4.0 * prof.w * (60.0 + c) / q)
        tail = PowerLaw(max(edge, prof.lo), fq * area * prof.radial_integral(q, math.inf), 0.0)
    elif prof.w is None and prof.lo == 0:
        tail = PowerLaw(0.0, fq * area * prof.A ** q / c, c)
    scale = math.sqrt(prof.w) if prof.w is not None else (prof.lo or (prof.hi if math.isfinite(prof.hi) else 1.0))
    return MassProfile(func, breaks, head, tail, True, scale)


def _grid_profile(g: GridSample, x, q, factor) -> MassProfile:
    cs, rs, wts = _grid_balls(g, q, factor)
    if not len(rs):
        return MassProfile(lambda t: np.zeros_like(t), (), PowerLaw(math.inf, 0.0, 0.0), None, True, g.spacing)
    prof = _balls_profile(cs, rs, wts, x)
    return MassProfile(prof.func, prof.breaks, prof.head, prof.tail, False, g.spacing, meta={"grid": True})


def _generic_profile(f, x, q, fq) -> MassProfile:
    n = dim(f)
    breaks = []
    u = _as_union(_innermost(f))
    if isinstance(u, IndicatorBallUnion):
        for c, r in u.balls:
            d = float(np.linalg.norm(np.array(c) - x))
            breaks += [v for v in (d - r, d + r) if v > 0]
    reach = _support_radius(f)
    tail = None
    if math.isfinite(reach):
        edge = float(np.linalg.norm(x)) + reach
        tail = PowerLaw(edge, fq * total_integral(f, q)[0], 0.0)
        breaks.append(edge)

    def func(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return fq * np.array([ball_integral(f, x, tt, q, method="quadrature")[0] if tt > 0 else 0.0 for tt in t])

    return MassProfile(func, tuple(sorted(set(breaks))), None, tail, False, _length_scale(f))


def _innermost(f):
    while isinstance(f, (Weighted, Scaled)):
        f = f.inner
    return f


# ---------------------------------------------------------------------------
# transformations
# ---------------------------------------------------------------------------


def translate(f, v):
    """``f(· - v)``."""
    v = np.asarray(v, dtype=float)
    if isinstance(f, GaussianBump):
        return GaussianBump(tuple(np.array(f.center) + v), f.width)
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        return IndicatorBallUnion(tuple((tuple(np.array(c) + v), r) for c, r in _as_union(f).balls))
    if isinstance(f, GridSample):
        return GridSample(tuple(np.array(f.origin) + v), f.spacing, f.values)
    if isinstance(f, Scaled):
        return Scaled(f.factor, translate(f.inner, v))
    raise UnsupportedError(f"translation of {type(f).__name__} leaves the representable family")


def dilate(f, lam: float):
    """``f(lam * ·)``."""
    if not lam > 0:
        raise MorreyHeatError("dilation factor must be positive")
    if isinstance(f, GaussianBump):
        return GaussianBump(tuple(np.array(f.center) / lam), f.width / lam ** 2)
    if isinstance(f, (IndicatorBallUnion, SpacedBallsG)):
        return IndicatorBallUnion(tuple((tuple(np.array(c) / lam), r / lam) for c, r in _as_union(f).balls))
    if isinstance(f, GridSample):
        return GridSample(tuple(np.array(f.origin) / lam), f.spacing / lam, f.values)
    if isinstance(f, RadialPower):
        inner = None if f.inner_cut is None else f.inner_cut / lam
        outer = None if f.outer_cut is None else f.outer_cut / lam
        return Scaled(lam ** (-f.a), RadialPower(f.a, f.n, inner, outer))
    if isinstance(f, Weighted):
        return Scaled(lam ** (-f.gamma), Weighted(f.gamma, dilate(f.inner, lam)))
    if isinstance(f, Scaled):
        return Scaled(f.factor, dilate(f.inner, lam))
    raise UnsupportedError(f"dilation of {type(f).__name__}")


def sample_on_grid(f, spacing: float, lower, shape) -> GridSample:
    """Cell-center samples of ``f`` on a grid; the result is piecewise constant."""
    g = GridSample(tuple(lower), spacing, np.zeros(tuple(shape)))
    vals = _eval(f, g.cell_centers()).reshape(tuple(shape))
    return GridSample(tuple(lower), spacing, vals)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_json(f) -> dict:
    if isinstance(f, RadialPower):
        return {"variant": "RadialPower", "a": f.a, "n": f.n, "inner_cut": f.inner_cut, "outer_cut": f.outer_cut}
    if isinstance(f, GaussianBump):
        return {"variant": "GaussianBump", "center": list(f.center), "width": f.width}
    if isinstance(f, IndicatorBallUnion):
        return {"variant": "IndicatorBallUnion", "balls": [[list(c), r] for c, r in f.balls]}
    if isinstance(f, SpacedBallsG):
        return {"variant": "SpacedBallsG", "J": f.J, "n": f.n}
    if isinstance(f, GridSample):
        return {"variant": "GridSample", "origin": list(f.origin), "spacing": f.spacing, "values": f.values.tolist()}
    if isinstance(f, Weighted):
        return {"variant": "Weighted", "gamma": f.gamma, "inner": to_json(f.inner)}
    if isinstance(f, Scaled):
        return {"variant": "Scaled", "factor": f.factor, "inner": to_json(f.inner)}
    raise UnsupportedError(f"unknown function representation {type(f).__name__}")


def from_json(obj, n: Optional[int] = None):
    """Build a function from its JSON object (or JSON text).

    ``n`` fills the dimension of ``RadialPower`` / ``SpacedBallsG`` when the
    object omits it.
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "variant" not in obj:
        raise MorreyHeatError('function JSON must be an object with a "variant" key')
    kind = obj["variant"]
    try:
        if kind == "RadialPower":
            return RadialPower(float(obj["a"]), int(obj.get("n") or _need_n(n)), obj.get("inner_cut"), obj.get("outer_cut"))
        if kind == "GaussianBump":
            return GaussianBump(tuple(obj["center"]), float(obj["width"]))
        if kind == "IndicatorBallUnion":
            return IndicatorBallUnion(tuple((tuple(c), float(r)) for c, r in obj["balls"]))
        if kind == "SpacedBallsG":
            return SpacedBallsG(int(obj["J"]), int(obj.get("n") or _need_n(n)))
        if kind == "GridSample":
            return GridSample(tuple(obj["origin"]), float(obj["spacing"]), np.array(obj["values"], dtype=float))
        if kind == "Weighted":
            return Weighted(float(obj["gamma"]), from_json(obj["inner"], n))
        if kind == "Scaled":
            return Scaled(float(obj["factor"]), from_json(obj["inner"], n))
    except KeyError as exc:
        raise MorreyHeatError(f"{kind} JSON is missing field {exc.args[0]!r}") from None
    raise MorreyHeatError(f"unknown variant {kind!r}")


def _need_n(n):
    if n is None:
        raise MorreyHeatError("dimension n is required for this variant")
    return n
