"""Training objectives and their gradients w.r.t. the posterior scores."""

from __future__ import annotations

import math

import numpy as np

from .bounds import ComplexityTerms
from .edmax import EDPoint
from .kl import DEFAULT_INF_TOL, DEFAULT_MAX_ITER, DEFAULT_SUP_TOL, EDGE, kl_inf, kl_sup, kl_trinary
from .stats import MomentGradients, Posterior, moment_gradients


def log_barrier_ext(a: float, lam: float) -> float:
    """Log-barrier extension: -ln(-a)/lam for a <= -1/lam^2, linear continuation beyond."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if a <= -1.0 / lam**2:
        return -math.log(-a) / lam
    return lam * a - math.log(1.0 / lam**2) / lam + 1.0 / lam


def log_barrier_ext_grad(a: float, lam: float) -> float:
    if a <= -1.0 / lam**2:
        return -1.0 / (lam * a)
    return lam


def _cbound_parts(u: float, v: float):
    """1 - (1 - 2u)^2 / (1 - 2v) with its partials in u and v."""
    den = 1.0 - 2.0 * v
    if den <= 0.0:
        return 1.0, 0.0, 0.0
    num = 1.0 - 2.0 * u
    return 1.0 - num**2 / den, 4.0 * num / den, -2.0 * num**2 / den**2


def _prepare(pm, q, prior, delta):
    if prior is None:
        prior = Posterior.uniform(len(q))
    mg = moment_gradients(pm, q, prior)
    terms = ComplexityTerms.from_kl(mg.kl, pm.m, delta)
    return mg, terms


def objective_mcallester(pm, q: Posterior, prior: Posterior | None = None, delta: float = 0.05,
                         lam: float = 100.0, mg: MomentGradients | None = None):
    """C-bound with McAllester deviations plus a barrier keeping the risk bound below 1/2."""
    if mg is None:
        mg, terms = _prepare(pm, q, prior, delta)
    else:
        terms = ComplexityTerms.from_kl(mg.kl, pm.m, delta)
    m = pm.m
    mom = mg.moments
    sr = math.sqrt(terms.psi_r / 2.0)
    sd = math.sqrt(terms.psi_d / 2.0)
    a = mom.r + sr
    b = mom.d - sd
    grad_a = mg.grad_r + mg.grad_kl / (4.0 * m * sr)
    grad_b = mg.grad_d - 2.0 * mg.grad_kl / (4.0 * m * sd)
    u, gu = (a, grad_a) if a < 0.5 else (0.5, 0.0 * grad_a)
    v, gv = (b, grad_b) if b > 0.0 else (0.0, 0.0 * grad_b)
    c, dc_du, dc_dv = _cbound_parts(u, v)
    value = c + log_barrier_ext(a - 0.5, lam)
    grad = dc_du * gu + dc_dv * gv + log_barrier_ext_grad(a - 0.5, lam) * grad_a
    return value, grad


def _inversion_grads(mg, terms, m, sup_tol, inf_tol, max_iter):
    mom = mg.moments
    if mom.r < 1.0:
        rs = kl_sup(mom.r, terms.psi_r, sup_tol, max_iter)
        r_up = rs.p
        grad_r_up = rs.dq * mg.grad_r + rs.dpsi * mg.grad_kl / m
    else:
        r_up, grad_r_up = 1.0, np.zeros_like(mg.grad_r)
    if mom.d > 0.0:
        ds = kl_inf(mom.d, terms.psi_d, inf_tol, max_iter)
        d_low = ds.p if not ds.guarded else 0.0
        grad_d_low = ds.dq * mg.grad_d + ds.dpsi * 2.0 * mg.grad_kl / m
    else:
        d_low, grad_d_low = 0.0, np.zeros_like(mg.grad_d)
    return r_up, grad_r_up, d_low, grad_d_low


def objective_seeger(pm, q: Posterior, prior: Posterior | None = None, delta: float = 0.05,
                     lam: float = 100.0, sup_tol: float = DEFAULT_SUP_TOL, inf_tol: float = DEFAULT_INF_TOL,
                     max_iter: int = DEFAULT_MAX_ITER, mg: MomentGradients | None = None):
    """C-bound with kl-inverted risk and disagreement plus the risk barrier."""
    if mg is None:
        mg, terms = _prepare(pm, q, prior, delta)
    else:
        terms = ComplexityTerms.from_kl(mg.kl, pm.m, delta)
    r_up, grad_r_up, d_low, grad_d_low = _inversion_grads(mg, terms, pm.m, sup_tol, inf_tol, max_iter)
    u, gu = (r_up, grad_r_up) if r_up < 0.5 else (0.5, 0.0 * grad_r_up)
    v, gv = (d_low, grad_d_low) if d_low > 0.0 else (0.0, 0.0 * grad_d_low)
    c, dc_du, dc_dv = _cbound_parts(u, v)
    value = c + log_barrier_ext(r_up - 0.5, lam)
    grad = dc_du * gu + dc_dv * gv + log_barrier_ext_grad(r_up - 0.5, lam) * grad_r_up
    return value, grad


def objective_two_r(pm, q: Posterior, prior: Posterior | None = None, delta: float = 0.05,
                    sup_tol: float = DEFAULT_SUP_TOL, max_iter: int = DEFAULT_MAX_ITER,
                    mg: MomentGradients | None = None):
    """Twice the kl-inverted Gibbs risk."""
    if mg is None:
        mg, terms = _prepare(pm, q, prior, delta)
    else:
        terms = ComplexityTerms.from_kl(mg.kl, pm.m, delta)
    r = mg.moments.r
    if r >= 1.0:
        return 2.0, np.zeros_like(mg.grad_r)
    rs = kl_sup(r, terms.psi_r, sup_tol, max_iter)
    return 2.0 * rs.p, 2.0 * (rs.dq * mg.grad_r + rs.dpsi * mg.grad_kl / pm.m)


def _clip(x: float) -> float:
    return min(max(x, EDGE), 1.0 - EDGE)


def objective_lacasse(pm, q: Posterior, ed_star: EDPoint, prior: Posterior | None = None,
                      delta: float = 0.05, lam: float = 100.0, mg: MomentGradients | None = None):
    """Barrier objective with the worst-case (e*, d*) held fixed.

    B(2 e_S + d_S - 1) - B(kl(e_S, d_S || e*, d*) - kappa): pushes the
    empirical moments away from the current worst point and shrinks kappa.
    """
    if mg is None:
        mg, terms = _prepare(pm, q, prior, delta)
    else:
        terms = ComplexityTerms.from_kl(mg.kl, pm.m, delta)
    m = pm.m
    e, d = mg.moments.e, mg.moments.d
    es, ds = ed_star.e, ed_star.d
    s = 2.0 * e + d - 1.0
    grad_s = 2.0 * mg.grad_e + mg.grad_d

    kl3 = kl_trinary(min(e, 1.0), min(d, 1.0 - min(e, 1.0)), es, ds)
    q3 = _clip(1.0 - e - d)
    p3 = 1.0 - es - ds
    dk_de = math.log(_clip(e) / es) - math.log(q3 / p3)
    dk_dd = math.log(_clip(d) / ds) - math.log(q3 / p3)
    grad_kl3 = dk_de * mg.grad_e + dk_dd * mg.grad_d
    grad_kappa = 2.0 * mg.grad_kl / m
    t = kl3 - terms.kappa

    value = log_barrier_ext(s, lam) - log_barrier_ext(t, lam)
    grad = log_barrier_ext_grad(s, lam) * grad_s - log_barrier_ext_grad(t, lam) * (grad_kl3 - grad_kappa)
    return value, grad
