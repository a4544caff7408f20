"""Independent reference implementations used to freeze expected values.

Nothing here imports the package under test.
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np

mpmath.mp.dps = 50


def kl_mp(q, p) -> float:
    q, p = mpmath.mpf(q), mpmath.mpf(p)
    out = mpmath.mpf(0)
    if q > 0:
        out += q * mpmath.log(q / p)
    if q < 1:
        out += (1 - q) * mpmath.log((1 - q) / (1 - p))
    return float(out)


def kl3_mp(q1, q2, p1, p2) -> float:
    qs = [mpmath.mpf(q1), mpmath.mpf(q2)]
    ps = [mpmath.mpf(p1), mpmath.mpf(p2)]
    qs.append(1 - qs[0] - qs[1])
    ps.append(1 - ps[0] - ps[1])
    return float(sum(q * mpmath.log(q / p) for q, p in zip(qs, ps) if q > 0))


def _kl_float(q: float, p: float) -> float:
    a = q * math.log(q / p) if q > 0 else 0.0
    b = (1 - q) * math.log((1 - q) / (1 - p)) if q < 1 else 0.0
    return a + b


def invert_oracle(q: float, psi: float, upper: bool, tol: float = 1e-12) -> float:
    """Plain bisection for the largest (upper) or smallest p with kl(q||p) <= psi."""
    lo, hi = (q, 1.0 - 1e-15) if upper else (1e-15, q)
    if upper and _kl_float(q, hi) <= psi:
        return hi
    if not upper and _kl_float(q, lo) <= psi:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        inside = _kl_float(q, mid) <= psi
        if upper:
            lo, hi = (mid, hi) if inside else (lo, mid)
        else:
            lo, hi = (lo, mid) if inside else (mid, hi)
    return 0.5 * (lo + hi)


def cbound_expr(r: float, d: float) -> float:
    return 1.0 - (1.0 - 2.0 * r) ** 2 / (1.0 - 2.0 * d)


def grid_sup_cl(e_s: float, d_s: float, kappa: float, n: int = 2001):
    """Dense-grid sup of the worst-case C-bound over the confidence region in [0, 1/2]^2."""
    v = np.linspace(0.0, 0.5, n)
    E, D = np.meshgrid(v, v, indexing="ij")
    P3 = 1.0 - E - D
    q3 = 1.0 - e_s - d_s
    with np.errstate(divide="ignore", invalid="ignore"):
        kl = np.zeros_like(E)
        for q, p in ((e_s, E), (d_s, D), (q3, P3)):
            if q > 0:
                kl = kl + np.where(p > 0, q * np.log(q / p), np.inf)
        ok = (D < 0.5) & (D <= 2.0 * np.sqrt(np.minimum(E, 0.25)) - 2.0 * E) & (kl <= kappa)
        c = np.where(2 * E + D >= 1, 1.0, 1.0 - (1.0 - 2 * E - D) ** 2 / (1.0 - 2 * D))
    if not ok.any():
        return None
    return float(np.clip(c[ok], 0.0, 1.0).max())


def brute_moments(h: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Double-sum definitions of the Gibbs risk, disagreement and joint error."""
    n, m = h.shape
    r = sum(w[j] * (h[j, i] != y[i]) for j in range(n) for i in range(m)) / m
    d = sum(w[j] * w[k] * (h[j, i] != h[k, i]) for j, k in itertools.product(range(n), repeat=2)
            for i in range(m)) / m
    e = sum(w[j] * w[k] * (h[j, i] != y[i]) * (h[k, i] != y[i])
            for j, k in itertools.product(range(n), repeat=2) for i in range(m)) / m
    return float(r), float(d), float(e)


def brute_mv_risk(h: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    errs = 0
    for i in range(h.shape[1]):
        margin = sum(w[j] * h[j, i] for j in range(h.shape[0])) * y[i]
        errs += margin <= 0
    return errs / h.shape[1]


def finite_diff(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(x)
    for k in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        g[k] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))
