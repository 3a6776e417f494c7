"""Exponent arithmetic for the weighted heat smoothing estimates.

Everything here is closed-form double arithmetic: admissibility windows for
the weight exponent, the time-decay exponent of the smoothing estimate, and
the choice of interpolation endpoints used to derive the Morrey estimate from
two weighted-Lebesgue estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import DegenerateEndpointError, InadmissibleError, MorreyHeatError

IDENTITY_TOL = 1e-12


class _Infinity:
    """Sentinel for an infinite fine index ``r``.

    Kept distinct from ``float("inf")`` so that norm formulas branch on
    identity, never on a numeric comparison.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(r) -> bool:
    return r is INF


def fine_index(value):
    """Normalise a user supplied fine index: ``"inf"``, ``math.inf`` or ``INF`` map to ``INF``."""
    if value is INF:
        return INF
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        value = float(value)
    value = float(value)
    if math.isinf(value) and value > 0:
        return INF
    if not value >= 1:
        raise MorreyHeatError(f"fine index r must be >= 1 or inf, got {value}")
    return value


@dataclass(frozen=True)
class SpaceParams:
    """The exponent tuple ``(n, p, q, r, s, gamma, k, |alpha|)``."""

    n: int
    p: float
    q: float = 1.0
    r: object = INF
    s: float = 2.0
    gamma: float = 0.0
    k: int = 0
    alpha_order: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise MorreyHeatError(f"dimension n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r", fine_index(self.r))
        for name in ("p", "q", "s", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise MorreyHeatError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.p <= 1:
            raise MorreyHeatError(f"p must exceed 1, got {self.p}")
        if self.q < 1:
            raise MorreyHeatError(f"q must be >= 1, got {self.q}")
        if self.q > self.p:
            raise MorreyHeatError(f"q must not exceed p (q={self.q}, p={self.p})")
        if self.gamma < 0:
            raise MorreyHeatError(f"gamma must be >= 0, got {self.gamma}")
        if self.k < 0 or self.alpha_order < 0:
            raise MorreyHeatError("derivative orders must be non-negative")

    def replace(self, **changes) -> "SpaceParams":
        data = self.as_dict()
        data.update(changes)
        return SpaceParams(**data)

    def as_dict(self) -> dict:
        return {
            "n": self.n, "p": self.p, "q": self.q, "r": self.r, "s": self.s,
            "gamma": self.gamma, "k": self.k, "alpha_order": self.alpha_order,
        }

    def to_json(self) -> dict:
        d = self.as_dict()
        d["r"] = "inf" if is_inf(self.r) else self.r
        return d


class Window(NamedTuple):
    lower: float
    upper: float
    admissible: bool
    weak_claim: bool
    strong_claim: bool


def admissibility_window(params: SpaceParams) -> Window:
    """Open interval ``(n/q - n/p, n - n/p)`` for the weight exponent.

    ``admissible`` is strict membership of ``gamma``; ``weak_claim`` adds
    ``q <= s`` (weak-Lebesgue target) and ``strong_claim`` adds ``q < s``.
    """
    n, p, q = params.n, params.p, params.q
    lower = n / q - n / p
    upper = n - n / p
    inside = lower < params.gamma < upper
    return Window(lower, upper, inside, inside and q <= params.s, inside and q < params.s)


def smoothing_exponent(params: SpaceParams) -> float:
    n, p, s = params.n, params.p, params.s
    return -0.5 * n * (1.0 / p - 1.0 / s) - params.k - 0.5 * params.alpha_order - 0.5 * params.gamma


@dataclass(frozen=True)
class EndpointSelection:
    p0: float
    p1: float
    theta: float
    s0: float
    s1: float
    residuals: tuple = field(default=(0.0, 0.0), compare=False)

    def check(self, p: float, s: float, tol: float = IDENTITY_TOL) -> bool:
        rp = abs(1.0 / p - ((1 - self.theta) / self.p0 + self.theta / self.p1))
        rs = abs(1.0 / s - ((1 - self.theta) / self.s0 + self.theta / self.s1))
        return (
            rp <= tol and rs <= tol
            and self.p0 > p > self.p1 and self.s0 > s > self.s1
            and 0 < self.theta < 1
        )


def select_endpoints(params: SpaceParams) -> EndpointSelection:
    """Endpoints ``p0 > p > p1`` and targets ``s0 > s > s1`` sharing one ``theta``.

    ``p0`` and ``p1`` are forced by ``n/q - n/p0 = n - n/p1 = gamma``.  The
    lower target starts at the midpoint of ``q`` and ``s`` (of ``1`` and ``s``
    when ``q = s``) and is pulled toward ``s`` until ``s0`` is finite.
    """
    n, p, q, s, gamma = params.n, params.p, params.q, params.s, params.gamma
    if not admissibility_window(params).admissible:
        raise InadmissibleError(
            f"gamma={gamma} outside window ({n / q - n / p}, {n - n / p})"
        )
    if s <= 1:
        raise InadmissibleError(f"target exponent s must exceed 1, got {s}")
    denom0 = n / q - gamma
    if denom0 <= 0:
        raise DegenerateEndpointError(
            f"gamma={gamma} >= n/q={n / q}: upper endpoint p0 is not finite"
        )
    p0 = n / denom0
    p1 = n / (n - gamma)
    if not (p0 > p > p1 > 1):
        raise InadmissibleError(f"endpoint ordering fails: p0={p0}, p={p}, p1={p1}")
    inv_p, inv_p0, inv_p1 = 1.0 / p, 1.0 / p0, 1.0 / p1
    theta = (inv_p - inv_p0) / (inv_p1 - inv_p0)

    base = q if q < s else 1.0
    s1 = 0.5 * (base + s)
    for _ in range(200):
        inv_s0 = (1.0 / s - theta / s1) / (1.0 - theta)
        if inv_s0 > 0 and 1.0 / inv_s0 > s:
            break
        s1 = 0.5 * (s1 + s)
    else:  # pragma: no cover - s1 -> s always rescues inv_s0 > 0
        raise DegenerateEndpointError("no finite s0 found")
    s0 = 1.0 / inv_s0
    rp = abs(inv_p - ((1 - theta) * inv_p0 + theta * inv_p1))
    rs = abs(1.0 / s - ((1 - theta) / s0 + theta / s1))
    return EndpointSelection(p0, p1, theta, s0, s1, residuals=(rp, rs))
