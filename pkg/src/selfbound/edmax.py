"""Worst-case C-bound over the joint-error/disagreement confidence region.

Solves  sup C^L(e, d)  over
    { (e, d) in [0, 1/2]^2 : d <= 2 sqrt(min(e, 1/4)) - 2e,  d < 1/2,
      kl(e_S, d_S || e, d) <= kappa }
by bisection on the level alpha of the quasi-concave C^L: for each alpha the
concave program  max alpha (1 - 2d) - (1 - (2e + d))^2  is solved on the
(convex) feasible set by multi-resolution grid refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kl import kl_inf, kl_sup

ALPHA_TOL = 0.01
GRID_SIZE = 101
REFINE_LEVELS = 6
REFINE_SIZE = 21
_BOX_TOL = 1e-12


def cl(e, d):
    """C^L(e, d) = 1 - (1 - (2e + d))^2 / (1 - 2d), and 1 when d >= 1/2 or 2e + d >= 1."""
    e = np.asarray(e, dtype=float)
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = 1.0 - (1.0 - (2.0 * e + d)) ** 2 / (1.0 - 2.0 * d)
    v = np.where((d >= 0.5) | (2.0 * e + d >= 1.0), 1.0, v)
    v = np.clip(v, 0.0, 1.0)
    return float(v) if v.ndim == 0 else v


def kl_trinary_vec(q1: float, q2: float, p1, p2) -> np.ndarray:
    """kl(q1, q2 || p1, p2) over arrays of (p1, p2); +inf outside the open simplex."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    p3 = 1.0 - p1 - p2
    q3 = max(0.0, 1.0 - q1 - q2)
    out = np.zeros(np.broadcast(p1, p2).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for q, p in ((q1, p1), (q2, p2), (q3, p3)):
            if q > 0.0:
                out = out + np.where(p > 0.0, q * np.log(q / p), np.inf)
    return np.maximum(out, 0.0)


def d_ceiling(e):
    """Upper limit on d allowed by d <= 2 sqrt(min(e, 1/4)) - 2e."""
    e = np.asarray(e, dtype=float)
    return 2.0 * np.sqrt(np.minimum(np.maximum(e, 0.0), 0.25)) - 2.0 * e


@dataclass(frozen=True)
class EDPoint:
    e: float
    d: float
    objective: float
    feasible: bool
    rounds: int = 0


class _Region:
    def __init__(self, e_s: float, d_s: float, kappa: float):
        self.e_s, self.d_s, self.kappa = e_s, d_s, kappa
        self.box = self._box()

    def _box(self):
        # kl of the marginals never exceeds the trinary kl, so the marginal
        # inversions bound the region
        def rng(q):
            lo = kl_inf(q, self.kappa, tol=_BOX_TOL).p if q > 0.0 else 0.0
            hi = kl_sup(q, self.kappa, tol=_BOX_TOL).p if q < 1.0 else 1.0
            return max(0.0, lo), min(0.5, hi)

        return rng(self.e_s), rng(self.d_s)

    def feasible(self, e, d):
        e = np.asarray(e, dtype=float)
        d = np.asarray(d, dtype=float)
        ok = (e >= 0.0) & (e <= 0.5) & (d >= 0.0) & (d < 0.5) & (d <= d_ceiling(e))
        kl = np.full(np.broadcast(e, d).shape, np.inf)
        if ok.any():
            kl[ok] = kl_trinary_vec(self.e_s, self.d_s, e[ok], d[ok])
        return ok & (kl <= self.kappa)

    def grid(self, e_lo, e_hi, d_lo, d_hi, size):
        ev = np.linspace(e_lo, e_hi, size)
        dv = np.linspace(d_lo, d_hi, size)
        E, D = np.meshgrid(ev, dv, indexing="ij")
        E, D = E.ravel(), D.ravel()
        mask = self.feasible(E, D)
        return E[mask], D[mask]


def _level_objective(alpha, e, d):
    return alpha * (1.0 - 2.0 * d) - (1.0 - (2.0 * e + d)) ** 2


def _refine(region: _Region, fn, base_e, base_d, grid_size, refine_levels, refine_size):
    g = fn(base_e, base_d)
    k = int(np.argmax(g))
    be, bd, bg = base_e[k], base_d[k], g[k]
    (e_lo, e_hi), (d_lo, d_hi) = region.box
    he = (e_hi - e_lo) / (grid_size - 1)
    hd = (d_hi - d_lo) / (grid_size - 1)
    for _ in range(refine_levels):
        he *= 3.0
        hd *= 3.0
        E, D = region.grid(max(e_lo, be - he), min(e_hi, be + he),
                           max(d_lo, bd - hd), min(d_hi, bd + hd), refine_size)
        if E.size:
            g = fn(E, D)
            k = int(np.argmax(g))
            if g[k] > bg:
                be, bd, bg = E[k], D[k], g[k]
        he = 2.0 * he / (refine_size - 1)
        hd = 2.0 * hd / (refine_size - 1)
    return float(be), float(bd)


def maximize_e_d(e_s: float, d_s: float, kappa: float, alpha_tol: float = ALPHA_TOL,
                 grid_size: int = GRID_SIZE, refine_levels: int = REFINE_LEVELS,
                 refine_size: int = REFINE_SIZE) -> EDPoint:
    """Return the feasible (e*, d*) with the largest C^L found along the alpha bisection."""
    if kappa < 0.0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    region = _Region(float(e_s), float(d_s), float(kappa))
    if kappa == 0.0:
        ok = bool(region.feasible(e_s, d_s))
        return EDPoint(float(e_s), float(d_s), cl(e_s, d_s) if ok else 1.0, ok)

    (e_lo, e_hi), (d_lo, d_hi) = region.box
    base_e, base_d = region.grid(e_lo, e_hi, d_lo, d_hi, grid_size)
    if region.feasible(e_s, d_s):
        base_e = np.append(base_e, e_s)
        base_d = np.append(base_d, d_s)
    if base_e.size == 0:
        return EDPoint(float(e_s), float(d_s), 1.0, False)

    a_lo, a_hi = 0.0, 1.0
    best = None
    rounds = 0
    while a_hi - a_lo > alpha_tol:
        rounds += 1
        alpha = 0.5 * (a_lo + a_hi)
        e, d = _refine(region, lambda e, d: _level_objective(alpha, e, d),
                       base_e, base_d, grid_size, refine_levels, refine_size)
        val = cl(e, d)
        if best is None or val > best[2]:
            best = (e, d, val)
        if val >= 1.0 - alpha:
            a_hi = alpha
        else:
            a_lo = alpha
    # polish: climb C^L itself around the incumbent (the level maximizers only
    # approximate the C^L maximizer to within the alpha tolerance)
    seed_e = np.append(base_e, best[0]) if best else base_e
    seed_d = np.append(base_d, best[1]) if best else base_d
    e, d = _refine(region, cl, seed_e, seed_d, grid_size, refine_levels, refine_size)
    if best is None or cl(e, d) > best[2]:
        best = (e, d, cl(e, d))
    return EDPoint(best[0], best[1], best[2], True, rounds)


def max_rounds(alpha_tol: float) -> int:
    return math.ceil(math.log2(1.0 / alpha_tol))
