"""Binary/trinary kl divergences and their bisection inversions."""

from __future__ import annotations

import math
from dataclasses import dataclass

EDGE = 1e-15

DEFAULT_SUP_TOL = 1e-9
DEFAULT_INF_TOL = 1e-2
DEFAULT_MAX_ITER = 1000


def _xlogy(x: float, y: float) -> float:
    # x * ln(x / y) with 0 ln 0 := 0
    if x == 0.0:
        return 0.0
    return x * math.log(x / y)


def kl_binary(q: float, p: float) -> float:
    """kl(q || p) between Bernoulli(q) and Bernoulli(p)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    return max(0.0, _xlogy(q, p) + _xlogy(1.0 - q, 1.0 - p))


def kl_trinary(q1: float, q2: float, p1: float, p2: float) -> float:
    """kl between the 3-outcome distributions (q1, q2, 1-q1-q2) and (p1, p2, 1-p1-p2)."""
    if p1 <= 0.0 or p2 <= 0.0 or p1 + p2 >= 1.0:
        raise ValueError(f"(p1, p2) = ({p1}, {p2}) is not strictly inside the simplex")
    if q1 < 0.0 or q2 < 0.0 or q1 + q2 > 1.0 + 1e-12:
        raise ValueError(f"(q1, q2) = ({q1}, {q2}) is not in the simplex")
    q3 = max(0.0, 1.0 - q1 - q2)
    return max(0.0, _xlogy(q1, p1) + _xlogy(q2, p2) + _xlogy(q3, 1.0 - p1 - p2))


@dataclass(frozen=True)
class KlInversionResult:
    p: float
    dq: float
    dpsi: float
    iterations: int
    converged: bool = True
    # p was pinned to the clamped interval edge; derivatives are reported as 0
    guarded: bool = False


def kl_inversion_derivatives(q: float, p: float) -> tuple[float, float]:
    """Partial derivatives (dp/dq, dp/dpsi) of an inversion p solving kl(q||p) = psi.

    Obtained from the implicit function theorem applied to kl(q||p) - psi = 0.
    """
    if p == q:
        raise ValueError("derivatives are undefined at p == q")
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise ValueError(f"q and p must be interior, got q={q}, p={p}")
    denom = (1.0 - q) / (1.0 - p) - q / p
    dq = (math.log((1.0 - q) / (1.0 - p)) - math.log(q / p)) / denom
    return dq, 1.0 / denom


def _bisect(q: float, psi: float, upper: bool, tol: float, max_iter: int):
    if upper:
        lo, hi = max(q, EDGE), 1.0 - EDGE
    else:
        lo, hi = EDGE, min(q, 1.0 - EDGE)
    # the whole interval already satisfies the budget: the answer is the edge
    edge = hi if upper else lo
    if kl_binary(q, edge) <= psi:
        return edge, 0, True, True
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        if hi - lo < tol:
            converged = True
            break
        p = 0.5 * (lo + hi)
        if p <= lo or p >= hi:
            converged = True
            break
        k = kl_binary(q, p)
        if k == psi:
            return p, it, True, False
        # kl grows when moving away from q
        if (k > psi) == upper:
            hi = p
        else:
            lo = p
    # the bracket endpoint on the far side from q is always a valid bound
    return (hi if upper else lo), it, converged, False


def _invert(q, psi, tol, max_iter, upper):
    if psi < 0.0:
        raise ValueError(f"psi must be nonnegative, got {psi}")
    if psi == 0.0:
        return KlInversionResult(p=q, dq=1.0, dpsi=math.inf, iterations=0)
    p, it, converged, guarded = _bisect(q, psi, upper, tol, max_iter)
    if guarded:
        return KlInversionResult(p=p, dq=0.0, dpsi=0.0, iterations=it, converged=converged, guarded=True)
    qc = min(max(q, EDGE), 1.0 - EDGE)
    if p == qc:
        return KlInversionResult(p=p, dq=1.0, dpsi=math.inf, iterations=it, converged=converged)
    dq, dpsi = kl_inversion_derivatives(qc, p)
    return KlInversionResult(p=p, dq=dq, dpsi=dpsi, iterations=it, converged=converged)


def kl_sup(q: float, psi: float, tol: float = DEFAULT_SUP_TOL, max_iter: int = DEFAULT_MAX_ITER) -> KlInversionResult:
    """Largest p in (0, 1) with kl(q||p) <= psi.

    The returned p is the upper end of the final bisection bracket, so it never
    underestimates the exact inversion.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    return _invert(q, psi, tol, max_iter, upper=True)


def kl_inf(q: float, psi: float, tol: float = DEFAULT_INF_TOL, max_iter: int = DEFAULT_MAX_ITER) -> KlInversionResult:
    """Smallest p in (0, 1) with kl(q||p) <= psi (lower bracket end, never overestimates)."""
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    return _invert(q, psi, tol, max_iter, upper=False)
