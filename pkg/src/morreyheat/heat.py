"""The heat semigroup applied to weighted sources, with low-order derivatives.

Three backends evaluate ``d_t^k d_x^alpha e^{t Lap}[|.|^{-gamma} f]``:

``closed-form``
    Gaussian sources (any centre, ``gamma = 0``).  Gaussian convolved with
    the heat kernel is a wider Gaussian; derivatives are Hermite factors.
``radial-quadrature``
    Sources that depend on ``|x|`` only, including weighted power laws.
    The angular integral of the kernel is a modified Bessel function, which
    leaves a one-dimensional integral in the source radius ``rho``.  The
    singular origin panel uses a Gauss-Jacobi rule carrying ``rho^{n-1-b}``.
``grid-convolution``
    Everything else.  The source is sampled on a tensor grid and convolved
    with separable per-axis kernels by direct summation (the trapezoid rule,
    which is spectrally accurate for the Gaussian kernel once ``h <= sqrt(t)``).
"""

from __future__ import annotations

import math
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, special

from . import _quadrature as quad
from . import functions as fn
from . import spaces
from .errors import (
    DivergentError,
    MeshUnderresolvedError,
    MorreyHeatError,
    NonIntegrableError,
    UnsupportedError,
)
from .scaling import INF, fine_index, is_inf

CLOSED = "closed-form"
RADIAL = "radial-quadrature"
GRID = "grid-convolution"
BACKENDS = (CLOSED, RADIAL, GRID)

WINDOW = 13.0          # kernel window half-width in units of sqrt(t)
MAX_GRID_NODES = 2_000_000
RESOLUTION_TOL = 0.01


def heat_kernel(t: float, x, n: Optional[int] = None):
    """``(4 pi t)^{-n/2} exp(-|x|^2 / 4t)`` at a point or at the rows of an array."""
    if not t > 0:
        raise MorreyHeatError("heat kernel needs t > 0")
    X = np.asarray(x, dtype=float)
    if n is None:
        n = X.shape[-1] if X.ndim else 1
    if X.ndim == 0 or (X.ndim == 1 and n == 1 and X.shape[0] != 1):
        r2 = X ** 2
    else:
        r2 = np.sum(X ** 2, axis=-1)
    out = (4.0 * math.pi * t) ** (-n / 2.0) * np.exp(-r2 / (4.0 * t))
    return float(out) if np.ndim(out) == 0 else out


def power_heat_at_origin(n: int, b: float, t: float) -> float:
    """``e^{t Lap}[|.|^{-b}](0) = (4t)^{-b/2} Gamma((n-b)/2) / Gamma(n/2)``."""
    if not b < n:
        raise NonIntegrableError(f"|x|^-{b} is not locally integrable in R^{n}")
    return (4.0 * t) ** (-b / 2.0) * math.exp(special.gammaln((n - b) / 2.0) - special.gammaln(n / 2.0))


# ---------------------------------------------------------------------------
# derivative bookkeeping
# ---------------------------------------------------------------------------


def _alpha_tuple(alpha, n: int) -> tuple:
    if alpha is None:
        return (0,) * n
    if isinstance(alpha, (int, np.integer)):
        if alpha < 0:
            raise UnsupportedError("derivative order must be non-negative")
        return (int(alpha),) + (0,) * (n - 1) if n >= 1 else ()
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n or any(a < 0 for a in alpha):
        raise UnsupportedError(f"multi-index {alpha} does not fit dimension {n}")
    return alpha


def _hermite_factor(m: int, y, sigma: float):
    """``d^m/dy^m exp(-y^2 / 2 sigma^2)`` divided by ``exp(-y^2 / 2 sigma^2)``."""
    if m == 0:
        return np.ones_like(y)
    return (-1.0 / sigma) ** m * special.eval_hermitenorm(m, y / sigma)


def _gauss_1d(m: int, y, t: float):
    """``m``-th derivative of the 1-D heat kernel at ``y``."""
    sigma = math.sqrt(2.0 * t)
    g = np.exp(-y * y / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
    return _hermite_factor(m, y, sigma) * g


def _derivative_orders(alpha: tuple, k: int):
    """Per-axis orders of the terms of ``d_t^k d^alpha`` with ``d_t`` replaced by the Laplacian."""
    if k == 0:
        return [alpha]
    return [tuple(a + (2 if i == j else 0) for i, a in enumerate(alpha)) for j in range(len(alpha))]


# ---------------------------------------------------------------------------
# radial kernel terms: coef * r^pr * rho^prho * t^pt * E * F_{nu+m}
# with E = exp(-(r^2+rho^2)/4t), F_mu(z) = z^{-mu} I_mu(z), z = r rho / 2t
# ---------------------------------------------------------------------------


Term = tuple  # (pr, prho, pt, m) -> coef stored in dicts


def _base_terms(n: int) -> dict:
    return {(0, 0, -n / 2.0, 0): 2.0 ** (-n / 2.0)}


def _merge(out, key, c):
    if c != 0.0:
        out[key] += c


def _d_r(terms: dict) -> dict:
    out = defaultdict(float)
    for (pr, ph, pt, m), c in terms.items():
        if pr != 0:
            _merge(out, (pr - 1, ph, pt, m), c * pr)
        _merge(out, (pr + 1, ph, pt - 1, m), -c / 2.0)
        _merge(out, (pr + 1, ph + 2, pt - 2, m + 1), c / 4.0)
    return dict(out)


def _d_t(terms: dict) -> dict:
    out = defaultdict(float)
    for (pr, ph, pt, m), c in terms.items():
        _merge(out, (pr, ph, pt - 1, m), c * pt)
        _merge(out, (pr + 2, ph, pt - 2, m), c / 4.0)
        _merge(out, (pr, ph + 2, pt - 2, m), c / 4.0)
        _merge(out, (pr + 2, ph + 2, pt - 3, m + 1), -c / 4.0)
    return dict(out)


def _div_r(terms: dict) -> dict:
    if any(pr < 1 for (pr, _, _, _), c in terms.items() if c != 0):
        raise MorreyHeatError("term list is not divisible by r")
    return {(pr - 1, ph, pt, m): c for (pr, ph, pt, m), c in terms.items()}


def _ef(mu: float, r: float, rho: np.ndarray, t: float) -> np.ndarray:
    """``exp(-(r^2+rho^2)/4t) * z^{-mu} I_mu(z)`` without overflow."""
    z = r * rho / (2.0 * t)
    out = np.empty_like(rho)
    small = z < 1.0
    if np.any(small):
        zz = 0.25 * z[small] ** 2
        series = np.zeros_like(zz)
        term = np.full_like(zz, 2.0 ** (-mu) / special.gamma(mu + 1.0))
        for j in range(14):
            series += term
            term = term * zz / ((j + 1.0) * (j + 1.0 + mu))
        out[small] = series * np.exp(-(r * r + rho[small] ** 2) / (4.0 * t))
    big = ~small
    if np.any(big):
        zb = z[big]
        out[big] = zb ** (-mu) * special.ive(mu, zb) * np.exp(-((r - rho[big]) ** 2) / (4.0 * t))
    return out


def _eval_terms(terms: dict, nu: float, r: float, rho, t: float, cache: dict):
    total = np.zeros_like(rho)
    for (pr, ph, pt, m), c in terms.items():
        if m not in cache:
            cache[m] = _ef(nu + m, r, rho, t)
        rpow = 1.0 if pr == 0 else r ** pr
        total += c * rpow * t ** pt * rho ** ph * cache[m]
    return total


# ---------------------------------------------------------------------------
# HeatField
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HeatField:
    """``d_t^k d_x^alpha e^{t Lap}[|.|^{-gamma} source]`` as an evaluable object.

    Values are cached per mesh key; :meth:`sample` is safe to call from
    several threads at once.
    """

    source: object
    time: float
    gamma: float = 0.0
    k: int = 0
    alpha: tuple = ()
    backend: str = CLOSED
    _plan: object = field(default=None, repr=False)
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: object = field(default_factory=threading.Lock, repr=False)

    @property
    def n(self) -> int:
        return fn.dim(self.source)

    @property
    def order(self) -> int:
        return sum(self.alpha)

    def __call__(self, x):
        X = np.asarray(x, dtype=float)
        single = X.ndim <= 1
        X = np.atleast_2d(X.reshape(1, -1) if single else X)
        if X.shape[1] != self.n:
            raise MorreyHeatError(f"point has dimension {X.shape[1]}, field has {self.n}")
        out = self._plan.evaluate(X)
        return float(out[0]) if single else out

    def sample(self, points, key=None) -> np.ndarray:
        """Evaluate at the rows of ``points``, memoised under ``key`` (defaults to the bytes)."""
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
        key = key if key is not None else ("pts", X.shape, X.tobytes())
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        vals = self._plan.evaluate(X)
        vals.setflags(write=False)
        with self._lock:
            return self._memo.setdefault(key, vals)

    def to_grid(self, spacing: float, lower, shape) -> fn.GridSample:
        """Field values at cell centres, packaged as a ``GridSample``."""
        g = fn.GridSample(tuple(lower), spacing, np.zeros(tuple(shape)))
        vals = self.sample(g.cell_centers()).reshape(tuple(shape))
        return fn.GridSample(tuple(lower), spacing, vals)

    def radial(self, r):
        """Radial part ``d_t^k v(r)`` for fields of the radial backend."""
        if self.backend != RADIAL:
            raise UnsupportedError("radial profile only exists for the radial backend")
        return self._plan.profile(np.atleast_1d(np.asarray(r, dtype=float)), "v")


def apply_weighted_heat(f, gamma: float = 0.0, t: float = 1.0, k: int = 0, alpha=None,
                        backend: str = "auto") -> HeatField:
    """Build the field ``d_t^k d_x^alpha e^{t Lap}[|.|^{-gamma} f]``."""
    if not t > 0:
        raise MorreyHeatError(f"time must be positive, got {t}")
    if gamma < 0:
        raise MorreyHeatError("gamma must be >= 0")
    n = fn.dim(f)
    alpha = _alpha_tuple(alpha, n)
    if k not in (0, 1):
        raise UnsupportedError(f"unsupported order: time-derivative order {k} (only 0 or 1)")
    if sum(alpha) > 2:
        raise UnsupportedError(f"unsupported order: |alpha| = {sum(alpha)} (at most 2)")
    sing = fn._origin_order(f) + (gamma if fn._touches_origin(f) else 0.0)
    if sing >= n:
        raise NonIntegrableError(f"non-integrable weight: singularity order {sing} >= n = {n}")
    source = fn.Weighted(gamma, f) if gamma > 0 else f
    choice = _choose_backend(source, backend)
    if choice == CLOSED:
        plan = _GaussPlan(source, t, k, alpha)
    elif choice == RADIAL:
        plan = _RadialPlan(source, t, k, alpha)
    else:
        plan = _GridPlan(source, t, k, alpha)
    return HeatField(f, float(t), float(gamma), int(k), alpha, choice, plan)


def _signed(f):
    """``(signed factor, base)`` peeling ``Scaled`` layers."""
    c = 1.0
    while isinstance(f, fn.Scaled):
        c *= f.factor
        f = f.inner
    return c, f


def _choose_backend(source, backend: str) -> str:
    c, base = _signed(source)
    gauss_ok = isinstance(base, fn.GaussianBump)
    radial_ok = (fn.radial_profile(base) is not None) or fn.is_zero(source)
    if backend == "auto":
        if gauss_ok:
            return CLOSED
        if radial_ok:
            return RADIAL
        return GRID
    if backend not in BACKENDS:
        raise MorreyHeatError(f"unknown backend {backend!r}")
    if backend == CLOSED and not gauss_ok:
        raise UnsupportedError("closed-form backend needs an unweighted Gaussian source")
    if backend == RADIAL and not radial_ok:
        raise UnsupportedError("radial backend needs a source depending on |x| only")
    return backend


class _GaussPlan:
    def __init__(self, source, t, k, alpha):
        c, g = _signed(source)
        self.c, self.center, self.w, self.t = c, np.array(g.center), g.width, t
        self.W = g.width + t
        self.n = len(g.center)
        self.amp = c * (g.width / self.W) ** (self.n / 2.0)
        self.orders = _derivative_orders(alpha, k)

    def evaluate(self, X):
        Y = X - self.center
        sigma = math.sqrt(2.0 * self.W)
        base = self.amp * np.exp(-np.sum(Y * Y, axis=1) / (4.0 * self.W))
        total = np.zeros(len(X))
        for orders in self.orders:
            fac = np.ones(len(X))
            for i, m in enumerate(orders):
                if m:
                    fac = fac * _hermite_factor(m, Y[:, i], sigma)
            total += fac
        return base * total


class _RadialPlan:
    def __init__(self, source, t, k, alpha):
        c, base = _signed(source)
        self.sign = 1.0 if c >= 0 else -1.0
        n = fn.dim(source)
        prof = fn.radial_profile(source) if not fn.is_zero(source) else None
        self.zero = prof is None
        self.n, self.t, self.k, self.alpha = n, t, k, alpha
        self.nu = n / 2.0 - 1.0
        if prof is not None:
            self.A, self.b, self.w, self.lo, self.hi = prof.A, prof.a, prof.w, prof.lo, prof.hi
        v = _base_terms(n)
        if k:
            v = _d_t(v)
        d1 = _d_r(v)
        self.terms = {"v": v, "d1": d1, "d1r": _div_r(d1), "d2": _d_r(d1)}
        nz = [i for i, a in enumerate(alpha) if a]
        if sum(alpha) == 0:
            self.kind = "radial"
        elif sum(alpha) == 1:
            self.kind, self.idx = "first", nz[0]
        elif len(nz) == 2:
            self.kind, self.idx = "mixed", tuple(nz)
        else:
            self.kind, self.idx = "diag", nz[0]

    # rho-quadrature about one r value
    def _nodes(self, r: float):
        sigma = math.sqrt(self.t)
        s = max(self.lo, r - WINDOW * sigma)
        e = min(self.hi, r + WINDOW * sigma)
        h = sigma
        if self.w is not None:
            reach = math.sqrt(4.0 * self.w * 42.0)
            e = min(e, reach)
            h = min(h, math.sqrt(self.w))
        if not e > s:
            return np.empty(0), np.empty(0)
        beta = self.n - 1.0 - self.b
        nodes, weights = [], []
        if s == 0.0:
            top = min(h, e)
            x, wgt = quad.origin_nodes(top, beta, 16)
            nodes.append(x)
            weights.append(wgt)
            cur = top
        elif s < 0.5 * h:
            edges = quad.log_panels(s, min(h, e), 2.0)
            x, wgt = quad.panel_nodes(edges, 16)
            nodes.append(x)
            weights.append(wgt * x ** beta)
            cur = min(h, e)
        else:
            cur = s
        if e > cur:
            count = max(1, int(math.ceil((e - cur) / (0.5 * h))))
            x, wgt = quad.panel_nodes(np.linspace(cur, e, count + 1), 16)
            nodes.append(x)
            weights.append(wgt * x ** beta)
        rho = np.concatenate(nodes)
        wts = np.concatenate(weights)
        if self.w is not None:
            wts = wts * np.exp(-rho * rho / (4.0 * self.w))
        return rho, wts * self.A

    def profile(self, rs, *names):
        """Radial functions (``v``, ``d1``, ``d1r``, ``d2``) at the radii ``rs``."""
        out = {name: np.zeros(len(rs)) for name in names}
        if self.zero:
            return out if len(names) > 1 else out[names[0]]
        for j, r in enumerate(rs):
            rho, wts = self._nodes(float(r))
            if not rho.size:
                continue
            cache = {}
            for name in names:
                out[name][j] = self.sign * float(np.dot(wts, _eval_terms(self.terms[name], self.nu, float(r), rho, self.t, cache)))
        return out if len(names) > 1 else out[names[0]]

    def parts(self, rs):
        """``(radial, angular kind)``: value = P(r) + Q(r) * omega-monomial."""
        if self.kind == "radial":
            return self.profile(rs, "v"), None
        if self.kind == "first":
            return None, self.profile(rs, "d1")
        pr = self.profile(rs, "d1r", "d2")
        if self.kind == "mixed":
            return None, pr["d2"] - pr["d1r"]
        return pr["d1r"], pr["d2"] - pr["d1r"]

    def evaluate(self, X):
        r = np.linalg.norm(X, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            omega = np.where(r[:, None] > 0, X / np.where(r > 0, r, 1.0)[:, None], 0.0)
        P, Q = self.parts(r)
        if self.kind == "radial":
            return P
        if self.kind == "first":
            return Q * omega[:, self.idx]
        if self.kind == "mixed":
            i, j = self.idx
            return Q * omega[:, i] * omega[:, j]
        return P + Q * omega[:, self.idx] ** 2


def _support_box(f):
    """Axis-aligned box outside of which ``f`` is negligible: ``(lower, upper)``."""
    if isinstance(f, (fn.Weighted, fn.Scaled)):
        return _support_box(f.inner)
    if isinstance(f, fn.GaussianBump):
        c = np.array(f.center)
        reach = math.sqrt(4.0 * f.width * 40.0)
        return c - reach, c + reach
    if isinstance(f, (fn.IndicatorBallUnion, fn.SpacedBallsG)):
        balls = fn._as_union(f).balls
        cs = np.array([c for c, _ in balls])
        rs = np.array([r for _, r in balls])[:, None]
        return (cs - rs).min(axis=0), (cs + rs).max(axis=0)
    if isinstance(f, fn.GridSample):
        lo = np.array(f.origin)
        return lo, lo + f.spacing * np.array(f.values.shape)
    if isinstance(f, fn.RadialPower) and f.outer_cut is not None:
        n = f.n
        return np.full(n, -f.outer_cut), np.full(n, f.outer_cut)
    raise UnsupportedError(f"grid backend needs a source of bounded extent, got {type(f).__name__}")


def _smooth_source(f) -> bool:
    base = fn._innermost(f)
    return isinstance(base, fn.GaussianBump) and not isinstance(_signed(f)[1], fn.Weighted)


def _cell_average(f, lower, h, shape, sub: int = 4):
    """Average of ``f`` over each cell, by ``sub^n`` interior sub-samples."""
    n = len(shape)
    offs = (np.arange(sub) + 0.5) / sub * h
    grid = fn.GridSample(tuple(lower), h, np.zeros(shape))
    corners = grid.cell_centers() - 0.5 * h
    acc = np.zeros(len(corners))
    for shift in np.array(np.meshgrid(*([offs] * n), indexing="ij")).reshape(n, -1).T:
        acc += fn._eval(f, corners + shift)
    return (acc / sub ** n).reshape(shape)


class _GridPlan:
    def __init__(self, source, t, k, alpha):
        self.t, self.n = t, fn.dim(source)
        self.orders = _derivative_orders(alpha, k)
        c, base = _signed(source)
        if isinstance(base, fn.GridSample):
            h = base.spacing
            if h > math.sqrt(t):
                raise MeshUnderresolvedError(
                    f"grid spacing {h} exceeds sqrt(t) = {math.sqrt(t):.6g}; refine the source grid")
            vals = c * base.values
            lower = np.array(base.origin)
        elif isinstance(base, fn.Weighted) and isinstance(fn._unscale(base.inner)[1], fn.GridSample):
            gc, g = _signed(base.inner)
            h = g.spacing
            if h > math.sqrt(t):
                raise MeshUnderresolvedError(f"grid spacing {h} exceeds sqrt(t); refine the source grid")
            weight = _cell_average(fn.Weighted(base.gamma, fn.GridSample(g.origin, h, np.ones(g.values.shape))),
                                   np.array(g.origin), h, g.values.shape)
            vals = c * gc * g.values * weight
            lower = np.array(g.origin)
        else:
            lo, hi = _support_box(base)
            scale = math.sqrt(t)
            inner = fn._innermost(base)
            if isinstance(inner, fn.GaussianBump):
                scale = min(scale, math.sqrt(inner.width))
            h = scale / 8.0
            shape = tuple(int(math.ceil((b - a) / h)) for a, b in zip(lo, hi))
            if int(np.prod(shape)) > MAX_GRID_NODES:
                raise MeshUnderresolvedError(
                    f"grid backend would need {int(np.prod(shape))} nodes; source too large for t = {t}")
            lower = 0.5 * (lo + hi) - 0.5 * h * np.array(shape)
            if _smooth_source(base):
                vals = fn.sample_on_grid(base, h, lower, shape).values * c
            else:
                vals = _cell_average(base, lower, h, shape) * c
        self.h = h
        self.lower = lower
        self.values = np.asarray(vals, dtype=float)
        self.axes = [lower[i] + h * (np.arange(m) + 0.5) for i, m in enumerate(self.values.shape)]

    def evaluate(self, X):
        out = np.zeros(len(X))
        letters = "abc"[: self.n]
        subs = ",".join(f"p{ch}" for ch in letters) + f",{letters}->p"
        for start in range(0, len(X), 512):
            blk = X[start:start + 512]
            for orders in self.orders:
                mats = [_gauss_1d(m, blk[:, i, None] - self.axes[i][None, :], self.t)
                        for i, m in enumerate(orders)]
                out[start:start + 512] += np.einsum(subs, *mats, self.values, optimize=True)
        return out * self.h ** self.n


# ---------------------------------------------------------------------------
# norms of heat fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Target:
    """Norm requested from :func:`heat_norm`: ``lebesgue``, ``weak`` or ``lorentz``."""

    kind: str
    p: float
    r: object = None

    def __post_init__(self):
        if self.kind not in ("lebesgue", "weak", "lorentz"):
            raise MorreyHeatError(f"unknown norm target {self.kind!r}")
        if not self.p > 1:
            raise MorreyHeatError("target exponent must exceed 1")
        if self.kind == "lorentz":
            object.__setattr__(self, "r", fine_index(self.r if self.r is not None else INF))

    @classmethod
    def parse(cls, text: str) -> "Target":
        """``"lebesgue:6"``, ``"weak:6"`` or ``"lorentz:6,2"``."""
        kind, _, rest = text.partition(":")
        parts = rest.split(",") if rest else []
        if not parts:
            raise MorreyHeatError(f"target {text!r} needs an exponent, e.g. lebesgue:6")
        r = parts[1] if len(parts) > 1 else None
        return cls(kind.strip().lower(), float(parts[0]), r)


def heat_norm(field: HeatField, target) -> spaces.NormValue:
    if isinstance(target, str):
        target = Target.parse(target)
    if fn.is_zero(field.source):
        return spaces.NormValue(0.0)
    if field.backend == CLOSED and field.k == 0 and field.order == 0:
        plan = field._plan
        g = fn.Scaled(plan.amp, fn.GaussianBump(tuple(plan.center), plan.W))
        return _engine(g, target)
    if field.backend == RADIAL:
        return _radial_norm(field, target)
    return _grid_norm(field, target)


def _engine(f, target):
    if target.kind == "lebesgue":
        return spaces.lebesgue_norm(f, target.p)
    if target.kind == "weak":
        return spaces.weak_lebesgue_norm(f, target.p)
    return spaces.lorentz_norm(f, target.p, target.r)


def _from_discrete(values, weights, target):
    if target.kind == "lebesgue":
        return spaces.discrete_norms(values, weights, target.p)
    if target.kind == "weak" or is_inf(target.r):
        return spaces.discrete_norms(values, weights, target.p, "weak")
    return spaces.discrete_norms(values, weights, target.p, "lorentz", target.r)


# radial backend ------------------------------------------------------------


def _sphere_monomial(n: int, powers) -> float:
    """``int_{S^{n-1}} prod |omega_i|^{powers_i} d sigma``."""
    powers = list(powers) + [0.0] * (n - len(powers))
    logs = sum(special.gammaln((b + 1.0) / 2.0) for b in powers)
    return 2.0 * math.exp(logs - special.gammaln(sum((b + 1.0) / 2.0 for b in powers)))


def _radial_mesh(plan: _RadialPlan, m: int):
    """Radius nodes/weights (``r^{n-1} dr`` included) and the outer radius of the mesh."""
    sigma = math.sqrt(plan.t)
    edges = [0.0, sigma]
    if plan.w is not None:
        top = math.sqrt(4.0 * (plan.w + plan.t) * 45.0)
    elif math.isfinite(plan.hi):
        top = plan.hi + WINDOW * sigma
    else:
        top = 1e3 * max(sigma, plan.lo)
    edges += list(quad.log_panels(sigma, max(top, 2 * sigma), 1.5)[1:])
    for br in (plan.lo, plan.hi):
        if 0 < br < math.inf:
            edges += list(np.arange(max(br - 8 * sigma, 0.0), br + 8 * sigma, sigma))
    edges = np.unique(np.clip(np.array(edges), 0.0, max(top, 2 * sigma)))
    x, w = quad.panel_nodes(edges, m)
    return x, w * x ** (plan.n - 1), float(edges[-1])


def _angular_rule(n: int, m: int = 48):
    """Nodes ``c = omega_i`` and weights for ``int_{S^{n-1}} g(omega_i) d sigma``."""
    if n == 1:
        return np.array([1.0, -1.0]), np.array([1.0, 1.0])
    alpha = (n - 3) / 2.0
    c, w = special.roots_jacobi(m, alpha, alpha)
    area = fn.sphere_area(n - 1) if n > 2 else 2.0
    return c, w * area


def _angular_power_mean(P, Q, n, s):
    """``int_{S^{n-1}} |P + Q omega_i^2|^s d sigma`` per radius, split at sign changes."""
    if n == 1:
        return 2.0 * np.abs(P + Q) ** s
    area = fn.sphere_area(n - 1) if n > 2 else 2.0
    out = np.empty(len(P))
    x, wq = quad.legendre(24)
    for j, (a, b) in enumerate(zip(P, Q)):
        cuts = [0.0, math.pi / 2.0]
        if b != 0 and 0 < -a / b < 1:
            th = math.acos(math.sqrt(-a / b))
            cuts = [0.0, th, math.pi / 2.0]
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (hi - lo)
            th = lo + half * (x + 1.0)
            total += half * np.dot(wq, np.abs(a + b * np.cos(th) ** 2) ** s * np.sin(th) ** (n - 2))
        out[j] = 2.0 * total * area
    return out


def _radial_values(field, rs):
    plan = field._plan
    P, Q = plan.parts(rs)
    return P, Q


def _radial_lebesgue(field, s, m):
    plan = field._plan
    rs, wr, top = _radial_mesh(plan, m)
    P, Q = _radial_values(field, rs)
    n = plan.n
    if plan.kind == "radial":
        dens = fn.sphere_area(n) * np.abs(P) ** s
    elif plan.kind == "first":
        pw = [0.0] * n
        pw[plan.idx] = s
        dens = _sphere_monomial(n, pw) * np.abs(Q) ** s
    elif plan.kind == "mixed":
        pw = [0.0] * n
        for i in plan.idx:
            pw[i] = s
        dens = _sphere_monomial(n, pw) * np.abs(Q) ** s
    else:
        dens = _angular_power_mean(P, Q, n, s)
    total = float(np.dot(wr, dens))
    # power-law tail beyond the mesh
    k = np.argsort(rs)[-2:]
    g = dens[k] * rs[k] ** n
    if g[1] > 0 and g[0] > 0:
        slope = math.log(g[1] / g[0]) / math.log(rs[k[1]] / rs[k[0]])
        if slope >= -1e-9:
            if g[1] > 1e-12 * total:
                raise DivergentError("field norm integral does not converge at infinity", "r->inf")
        else:
            total += g[1] * (top / rs[k[1]]) ** slope / (-slope)
    return total


def _radial_norm(field, target) -> spaces.NormValue:
    plan = field._plan
    s = target.p
    if target.kind == "lebesgue":
        fine = _radial_lebesgue(field, s, 16)
        coarse = _radial_lebesgue(field, s, 8)
        if fine > 0 and abs(fine - coarse) > RESOLUTION_TOL * fine:
            raise MeshUnderresolvedError(f"mesh underresolved: two radial rules differ by {abs(fine - coarse) / fine:.3g}")
        val = fine ** (1.0 / s)
        err = val * abs(fine - coarse) / max(fine, 1e-300) / s
        return spaces.NormValue(val, err, spaces.QUAD)
    if plan.kind == "radial":
        weak = _radial_weak_monotone(field, s) if target.kind == "weak" or is_inf(target.r) else None
        if weak is not None:
            return weak
    vals, wts = _radial_discrete(field, 16)
    vals2, wts2 = _radial_discrete(field, 8)
    fine = _from_discrete(vals, wts, target)
    coarse = _from_discrete(vals2, wts2, target)
    if fine > 0 and abs(fine - coarse) > RESOLUTION_TOL * fine:
        raise MeshUnderresolvedError(f"mesh underresolved: two radial rules differ by {abs(fine - coarse) / fine:.3g}")
    return spaces.NormValue(fine, abs(fine - coarse), spaces.QUAD)


def _radial_discrete(field, m):
    """Quadrature nodes as a discrete measure on ``R^n``: values and weights."""
    plan = field._plan
    rs, wr, _ = _radial_mesh(plan, m)
    P, Q = _radial_values(field, rs)
    n = plan.n
    if plan.kind == "radial":
        return P, wr * fn.sphere_area(n)
    c, wc = _angular_rule(n)
    if plan.kind == "first":
        vals = Q[:, None] * c[None, :]
    elif plan.kind == "mixed":
        # omega_i * omega_j: sample an orthogonal pair on a small product rule
        return _mixed_discrete(plan, rs, wr, Q)
    else:
        vals = P[:, None] + Q[:, None] * c[None, :] ** 2
    return vals.ravel(), (wr[:, None] * wc[None, :]).ravel()


def _mixed_discrete(plan, rs, wr, Q):
    n = plan.n
    if n == 2:
        th = (np.arange(96) + 0.5) * 2 * math.pi / 96
        ang = np.cos(th) * np.sin(th)
        wa = np.full(96, 2 * math.pi / 96)
    else:
        c, wc = quad.legendre(32)
        ph = (np.arange(64) + 0.5) * 2 * math.pi / 64
        sin = np.sqrt(1 - c * c)
        ang = (sin[:, None] ** 2 * np.cos(ph)[None, :] * np.sin(ph)[None, :]).ravel() if n == 3 else None
        if ang is None:
            raise UnsupportedError("mixed second derivatives are supported for n <= 3")
        wa = (wc[:, None] * np.full(64, 2 * math.pi / 64)[None, :]).ravel()
    vals = Q[:, None] * ang[None, :]
    return vals.ravel(), (wr[:, None] * wa[None, :]).ravel()


def _radial_weak_monotone(field, s):
    """Exact weak norm ``sup_r |v(r)| (v_n r^n)^{1/s}`` when ``|v|`` is non-increasing."""
    plan = field._plan
    rs, _, top = _radial_mesh(plan, 16)
    order = np.argsort(rs)
    rs = rs[order]
    v = np.abs(plan.profile(rs, "v"))
    if np.any(np.diff(v) > 1e-12 * v.max()):
        return None
    vn = fn.unit_ball_volume(plan.n)
    g = v * (vn * rs ** plan.n) ** (1.0 / s)
    j = int(np.argmax(g))
    if j == len(rs) - 1:
        return None
    lo, hi = rs[max(j - 1, 0)], rs[j + 1]

    def neg(u):
        r = math.exp(u)
        return -abs(float(plan.profile(np.array([r]), "v")[0])) * (vn * r ** plan.n) ** (1.0 / s)

    res = optimize.minimize_scalar(neg, bounds=(math.log(lo), math.log(hi)), method="bounded",
                                   options={"xatol": 1e-10})
    best = max(g[j], -res.fun)
    return spaces.NormValue(float(best), float(abs(best - g[j])), spaces.SUP,
                            ("r", float(math.exp(res.x)) if -res.fun >= g[j] else float(rs[j])))


# grid and closed-form derivative fields ----------------------------------------


def _field_box(field):
    sigma = math.sqrt(field.time)
    if field.backend == CLOSED:
        plan = field._plan
        reach = math.sqrt(4.0 * plan.W * 42.0)
        return plan.center - reach, plan.center + reach, math.sqrt(plan.W) / 4.0
    plan = field._plan
    lo = plan.lower - 10.0 * sigma
    hi = plan.lower + plan.h * np.array(plan.values.shape) + 10.0 * sigma
    return lo, hi, min(sigma / 3.0, 2.0 * plan.h)


def _grid_norm(field, target) -> spaces.NormValue:
    lo, hi, h = _field_box(field)
    n = field.n
    shape = tuple(int(math.ceil((b - a) / h)) for a, b in zip(lo, hi))
    if int(np.prod(shape)) > MAX_GRID_NODES:
        raise MeshUnderresolvedError(f"norm mesh would need {int(np.prod(shape))} nodes")
    g = field.to_grid(h, lo, shape)
    vals = g.values
    fine = _from_discrete(vals, h ** n, target)
    coarse_vals = vals[tuple(slice(0, None, 2) for _ in range(n))]
    coarse = _from_discrete(coarse_vals, (2 * h) ** n, target)
    if fine > 0 and abs(fine - coarse) > RESOLUTION_TOL * fine:
        raise MeshUnderresolvedError(f"mesh underresolved: two grid resolutions differ by {abs(fine - coarse) / fine:.3g}")
    return spaces.NormValue(fine, abs(fine - coarse), spaces.GRID)


def field_integral(field: HeatField, spacing: Optional[float] = None) -> float:
    """``int`` of the field over ``R^n`` by the trapezoid rule on its support box."""
    if field.backend == RADIAL:
        plan = field._plan
        rs, wr, _ = _radial_mesh(plan, 16)
        if plan.kind != "radial":
            raise UnsupportedError("integral of a non-radial derivative field")
        return float(np.dot(wr, plan.profile(rs, "v"))) * fn.sphere_area(plan.n)
    lo, hi, h = _field_box(field)
    h = spacing or h
    shape = tuple(int(math.ceil((b - a) / h)) for a, b in zip(lo, hi))
    g = field.to_grid(h, lo, shape)
    return float(np.sum(g.values) * h ** field.n)


__all__ = [
    "heat_kernel", "power_heat_at_origin", "HeatField", "apply_weighted_heat", "heat_norm",
    "Target", "field_integral", "BACKENDS",
]
