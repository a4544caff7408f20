"""PAC-Bayesian certificates for the majority vote.

C-bound family: empirical, McAllester-style, Seeger-style (kl inversions) and
the joint (e, d) region bound; baselines 2r and 4e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import edmax
from .kl import DEFAULT_MAX_ITER, DEFAULT_SUP_TOL, kl_inf, kl_sup
from .stats import EmpiricalMoments

KINDS = ("empirical_c", "mcallester_c", "seeger_c", "lacasse_c", "two_r", "four_e")
RECONSTRUCTED = {"four_e"}
# inversion tolerance for reported certificates; the coarser kl_inf default is
# meant for the training objective and can leave the lower bracket end up to
# 1e-2 below the exact inversion
CERT_TOL = 1e-9


@dataclass(frozen=True)
class ComplexityTerms:
    psi_r: float
    psi_d: float
    kappa: float
    kl_qp: float
    m: int
    delta: float

    @classmethod
    def from_kl(cls, kl_qp: float, m: int, delta: float = 0.05) -> "ComplexityTerms":
        if m < 1:
            raise ValueError("m must be positive")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        kl_qp = max(0.0, float(kl_qp))
        log_term = math.log(2.0 * math.sqrt(m) / delta)
        return cls(
            psi_r=(kl_qp + log_term) / m,
            psi_d=(2.0 * kl_qp + log_term) / m,
            kappa=(2.0 * kl_qp + math.log((2.0 * math.sqrt(m) + m) / delta)) / m,
            kl_qp=kl_qp,
            m=int(m),
            delta=float(delta),
        )

    @property
    def kappa_4e(self) -> float:
        return (2.0 * self.kl_qp + math.log(2.0 * math.sqrt(self.m) / self.delta)) / self.m


@dataclass
class BoundCertificate:
    value: float
    kind: str
    delta: float
    m: int
    components: dict = field(default_factory=dict)
    degenerate: bool = False

    @property
    def confidence(self) -> float | None:
        if self.kind == "empirical_c":
            return None
        if self.kind in ("mcallester_c", "seeger_c"):
            return 1.0 - 2.0 * self.delta
        return 1.0 - self.delta

    def as_record(self) -> dict:
        rec = {"kind": self.kind, "value": self.value, "delta": self.delta, "m": self.m,
               "confidence": self.confidence, "degenerate": self.degenerate,
               "reconstructed_baseline": self.kind in RECONSTRUCTED}
        rec.update(self.components)
        return rec


def c_bound_from_risk(r: float, d: float) -> tuple[float, bool]:
    """1 - (1 - 2r)^2 / (1 - 2d) clamped to [0, 1]; flags the degenerate cases."""
    if r >= 0.5 or d >= 0.5:
        return 1.0, True
    v = 1.0 - (1.0 - 2.0 * r) ** 2 / (1.0 - 2.0 * d)
    return min(1.0, max(0.0, v)), False


def empirical_cbound(mom: EmpiricalMoments) -> float:
    return c_bound_from_risk(mom.e + mom.d / 2.0, mom.d)[0]


def _base(mom: EmpiricalMoments, terms: ComplexityTerms) -> dict:
    return {"r_S": mom.r, "d_S": mom.d, "e_S": mom.e, "kl_qp": terms.kl_qp,
            "psi_r": terms.psi_r, "psi_d": terms.psi_d, "kappa": terms.kappa}


def empirical_certificate(mom: EmpiricalMoments, terms: ComplexityTerms) -> BoundCertificate:
    v, deg = c_bound_from_risk(mom.e + mom.d / 2.0, mom.d)
    return BoundCertificate(v, "empirical_c", terms.delta, terms.m, _base(mom, terms), deg)


def mcallester_cbound(mom: EmpiricalMoments, terms: ComplexityTerms) -> BoundCertificate:
    r_up = min(0.5, mom.r + math.sqrt(terms.psi_r / 2.0))
    d_low = max(0.0, mom.d - math.sqrt(terms.psi_d / 2.0))
    v, deg = c_bound_from_risk(r_up, d_low)
    comps = _base(mom, terms) | {"r_upper": r_up, "d_lower": d_low}
    return BoundCertificate(v, "mcallester_c", terms.delta, terms.m, comps, deg)


def invert_risk(r: float, psi: float, tol: float = DEFAULT_SUP_TOL, max_iter: int = DEFAULT_MAX_ITER):
    if r >= 1.0:
        return None
    return kl_sup(r, psi, tol, max_iter)


def invert_disagreement(d: float, psi: float, tol: float = CERT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    if d <= 0.0:
        return None
    return kl_inf(d, psi, tol, max_iter)


def seeger_cbound(mom: EmpiricalMoments, terms: ComplexityTerms, sup_tol: float = CERT_TOL,
                  inf_tol: float = CERT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> BoundCertificate:
    rs = invert_risk(mom.r, terms.psi_r, sup_tol, max_iter)
    ds = invert_disagreement(mom.d, terms.psi_d, inf_tol, max_iter)
    r_up = min(0.5, rs.p if rs else 1.0)
    d_low = max(0.0, ds.p if ds else 0.0)
    v, deg = c_bound_from_risk(r_up, d_low)
    comps = _base(mom, terms) | {"r_upper": r_up, "d_lower": d_low}
    converged = (rs is None or rs.converged) and (ds is None or ds.converged)
    return BoundCertificate(v, "seeger_c", terms.delta, terms.m, comps, deg or not converged)


def lacasse_cbound(mom: EmpiricalMoments, terms: ComplexityTerms, alpha_tol: float = edmax.ALPHA_TOL,
                   ed_star: edmax.EDPoint | None = None) -> BoundCertificate:
    """Worst C^L over the confidence region; pass `ed_star` to reuse a maximizer already computed."""
    if ed_star is None:
        ed_star = edmax.maximize_e_d(mom.e, mom.d, terms.kappa, alpha_tol=alpha_tol)
    comps = _base(mom, terms) | {"e_star": ed_star.e, "d_star": ed_star.d}
    if not ed_star.feasible:
        return BoundCertificate(1.0, "lacasse_c", terms.delta, terms.m, comps, True)
    v = edmax.cl(ed_star.e, ed_star.d)
    return BoundCertificate(v, "lacasse_c", terms.delta, terms.m, comps, v >= 1.0)


def two_r_bound(mom: EmpiricalMoments, terms: ComplexityTerms, sup_tol: float = DEFAULT_SUP_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> BoundCertificate:
    rs = invert_risk(mom.r, terms.psi_r, sup_tol, max_iter)
    r_up = rs.p if rs else 1.0
    v = min(1.0, 2.0 * r_up)
    return BoundCertificate(v, "two_r", terms.delta, terms.m, _base(mom, terms) | {"r_upper": r_up}, v >= 1.0)


def four_e_bound(mom: EmpiricalMoments, terms: ComplexityTerms, sup_tol: float = DEFAULT_SUP_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> BoundCertificate:
    """Joint-error baseline 4 e_D <= 4 kl_sup(e_S | (2 KL + ln(2 sqrt(m) / delta)) / m).

    A reconstruction of the shape of the cited bound, not its verbatim statement.
    """
    es = kl_sup(mom.e, terms.kappa_4e, sup_tol, max_iter) if mom.e < 1.0 else None
    e_up = es.p if es else 1.0
    v = min(1.0, 4.0 * e_up)
    comps = _base(mom, terms) | {"kappa_4e": terms.kappa_4e, "e_upper": e_up}
    return BoundCertificate(v, "four_e", terms.delta, terms.m, comps, v >= 1.0)


def certify_all(mom: EmpiricalMoments, terms: ComplexityTerms, **opts) -> dict[str, BoundCertificate]:
    sup_tol = opts.get("sup_tol", CERT_TOL)
    inf_tol = opts.get("inf_tol", CERT_TOL)
    alpha_tol = opts.get("alpha_tol", edmax.ALPHA_TOL)
    return {
        "empirical_c": empirical_certificate(mom, terms),
        "mcallester_c": mcallester_cbound(mom, terms),
        "seeger_c": seeger_cbound(mom, terms, sup_tol, inf_tol),
        "lacasse_c": lacasse_cbound(mom, terms, alpha_tol),
        "two_r": two_r_bound(mom, terms, sup_tol),
        "four_e": four_e_bound(mom, terms, sup_tol),
    }


def recompute_value(cert: BoundCertificate) -> float:
    """Rebuild a certificate value from its recorded components alone."""
    c = cert.components
    if cert.kind == "empirical_c":
        return c_bound_from_risk(c["e_S"] + c["d_S"] / 2.0, c["d_S"])[0]
    if cert.kind in ("mcallester_c", "seeger_c"):
        return c_bound_from_risk(c["r_upper"], c["d_lower"])[0]
    if cert.kind == "lacasse_c":
        return 1.0 if cert.degenerate and cert.value >= 1.0 else edmax.cl(c["e_star"], c["d_star"])
    if cert.kind == "two_r":
        return min(1.0, 2.0 * c["r_upper"])
    if cert.kind == "four_e":
        return min(1.0, 4.0 * c["e_upper"])
    raise ValueError(f"unknown certificate kind {cert.kind!r}")


def dumps_certificate(cert: BoundCertificate) -> str:
    return "\n".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}"
                     for k, v in cert.as_record().items()) + "\n"


def loads_certificate(text: str) -> BoundCertificate:
    rec = dict(ln.split("=", 1) for ln in text.splitlines() if "=" in ln)
    fixed = {"kind", "value", "delta", "m", "confidence", "degenerate", "reconstructed_baseline"}
    comps = {k: float(v) for k, v in rec.items() if k not in fixed}
    return BoundCertificate(float(rec["value"]), rec["kind"], float(rec["delta"]), int(rec["m"]),
                            comps, rec["degenerate"] == "True")
