"""Fixed Gauss rules and small composite-integration helpers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=64)
def legendre(m: int):
    x, w = roots_legendre(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=256)
def jacobi_origin(m: int, beta: float):
    """Nodes/weights on [0, 1] for the weight ``x**beta``."""
    x, w = roots_jacobi(m, 0.0, beta)
    xs = 0.5 * (x + 1.0)
    ws = w * 0.5 ** (beta + 1.0)
    xs.setflags(write=False)
    ws.setflags(write=False)
    return xs, ws


def panel_nodes(edges, m: int):
    """Gauss-Legendre nodes and weights on consecutive panels ``edges[i]..edges[i+1]``."""
    edges = np.asarray(edges, dtype=float)
    x, w = legendre(m)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def origin_nodes(length: float, beta: float, m: int):
    """Nodes/weights for ``int_0^length rho**beta h(rho) d rho`` (weights absorb ``rho**beta``)."""
    xs, ws = jacobi_origin(m, float(beta))
    return length * xs, ws * length ** (beta + 1.0)


def log_panels(lo: float, hi: float, ratio: float = 2.0):
    """Geometric panel edges from ``lo`` to ``hi`` (both positive) with at most ``ratio`` per panel."""
    if hi <= lo:
        return np.array([lo, hi])
    count = max(1, int(np.ceil(np.log(hi / lo) / np.log(ratio))))
    return np.geomspace(lo, hi, count + 1)


def integrate_log_piece(func, lo: float, hi: float, m: int = 16, ratio: float = 2.0):
    """``int_lo^hi func(t) dt/t`` on geometric panels, returned with a two-rule error estimate.

    ``func`` must accept an array of ``t`` values.
    """
    edges = log_panels(lo, hi, ratio)
    logs = np.log(edges)
    coarse = _log_rule(func, logs, m)
    fine = _log_rule(func, logs, 2 * m)
    return fine, abs(fine - coarse)


def _log_rule(func, logs, m):
    u, w = panel_nodes(logs, m)
    return float(np.dot(w, func(np.exp(u))))
