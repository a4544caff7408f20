"""Self-bounding training loops over posterior scores."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, edmax
from .bounds import BoundCertificate, ComplexityTerms
from .forest import PredictionMatrix
from .kl import DEFAULT_INF_TOL, DEFAULT_MAX_ITER, DEFAULT_SUP_TOL
from .objectives import objective_lacasse, objective_mcallester, objective_seeger, objective_two_r
from .stats import Posterior, moment_gradients

log = logging.getLogger(__name__)

ALGORITHMS = {
    "alg1": "mcallester_c",
    "alg2": "seeger_c",
    "alg3": "lacasse_c",
    "alg4": "two_r",
}
ALIASES = {"alg1_mcallester": "alg1", "alg2_seeger": "alg2", "alg3_lacasse": "alg3", "alg4_two_r": "alg4"}
TRACE_COLUMNS = ("step", "objective", "r_S", "d_S", "e_S", "KL", "bound")


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 2000
    lam: float = 100.0
    optimizer: str = "cocob"
    step: float = 0.1
    cocob_alpha: float = 100.0
    delta: float = 0.05
    seed: int = 0
    sup_tol: float = DEFAULT_SUP_TOL
    inf_tol: float = DEFAULT_INF_TOL
    kl_max_iter: int = DEFAULT_MAX_ITER
    alpha_tol: float = edmax.ALPHA_TOL
    # inversions behind the reported certificates (not the objective)
    certificate_tol: float = bounds.CERT_TOL

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.lam <= 0.0:
            raise ValueError("lambda must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.optimizer not in ("gd", "cocob"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


# --- update rules ------------------------------------------------------------

def update_plain_gd(theta: np.ndarray, grad: np.ndarray, step: float) -> np.ndarray:
    return theta - step * grad


@dataclass(frozen=True)
class CocobState:
    """Coin-betting (COCOB-Backprop) state; each coordinate bets its wealth on the gradient sign."""

    theta0: np.ndarray
    theta: np.ndarray
    max_grad: np.ndarray
    abs_grad_sum: np.ndarray
    grad_sum: np.ndarray
    reward: np.ndarray
    alpha: float = 100.0

    @classmethod
    def start(cls, theta0, alpha: float = 100.0, eps: float = 1e-8) -> "CocobState":
        t = np.array(theta0, dtype=float)
        z = np.zeros_like(t)
        return cls(t.copy(), t.copy(), np.full_like(t, eps), z, z.copy(), z.copy(), alpha)


def update_coin_betting(state: CocobState, grad: np.ndarray) -> CocobState:
    g = np.asarray(grad, dtype=float)
    offset = state.theta - state.theta0
    max_grad = np.maximum(state.max_grad, np.abs(g))
    abs_sum = state.abs_grad_sum + np.abs(g)
    grad_sum = state.grad_sum + g
    reward = np.maximum(state.reward - g * offset, 0.0)
    scale = max_grad * np.maximum(abs_sum + max_grad, state.alpha * max_grad)
    new_offset = -grad_sum / scale * (reward + max_grad)
    return CocobState(state.theta0, state.theta0 + new_offset, max_grad, abs_sum, grad_sum, reward, state.alpha)


# --- training ------------------------------------------------------------------

class TrainingError(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


@dataclass
class LearnResult:
    posterior: Posterior
    certificate: BoundCertificate
    trace: list[dict] = field(default_factory=list)
    skipped_steps: int = 0


def canonical_algorithm(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    return name


def _evaluate(alg, pm, q, prior, cfg):
    """Objective value/gradient at q and the certificate of the matching kind."""
    mg = moment_gradients(pm, q, prior)
    terms = ComplexityTerms.from_kl(mg.kl, pm.m, cfg.delta)
    mom = mg.moments
    if alg == "alg1":
        val, grad = objective_mcallester(pm, q, prior, cfg.delta, cfg.lam, mg=mg)
        cert = bounds.mcallester_cbound(mom, terms)
    elif alg == "alg2":
        val, grad = objective_seeger(pm, q, prior, cfg.delta, cfg.lam, cfg.sup_tol, cfg.inf_tol,
                                     cfg.kl_max_iter, mg=mg)
        cert = bounds.seeger_cbound(mom, terms, cfg.certificate_tol, cfg.certificate_tol, cfg.kl_max_iter)
    elif alg == "alg3":
        ed = edmax.maximize_e_d(mom.e, mom.d, terms.kappa, alpha_tol=cfg.alpha_tol)
        cert = bounds.lacasse_cbound(mom, terms, ed_star=ed)
        if ed.feasible:
            val, grad = objective_lacasse(pm, q, ed, prior, cfg.delta, cfg.lam, mg=mg)
        else:
            val, grad = math.nan, None
    else:
        val, grad = objective_two_r(pm, q, prior, cfg.delta, cfg.sup_tol, cfg.kl_max_iter, mg=mg)
        cert = bounds.two_r_bound(mom, terms, cfg.certificate_tol, cfg.kl_max_iter)
    return val, grad, mg, cert


def learn(algorithm: str, pm: PredictionMatrix, prior: Posterior | None = None,
          cfg: TrainConfig = TrainConfig()) -> LearnResult:
    """Run T update steps from Q = P and certify the final posterior.

    The trace has T + 1 rows: row t describes the posterior after t updates.
    """
    alg = canonical_algorithm(algorithm)
    if prior is None:
        prior = Posterior.uniform(pm.n_voters)
    if len(prior) != pm.n_voters:
        raise ValueError("prior size does not match the number of voters")
    theta = prior.scores.copy()
    state = CocobState.start(theta, cfg.cocob_alpha) if cfg.optimizer == "cocob" else None
    trace: list[dict] = []
    skipped = 0
    cert = None
    for t in range(cfg.iterations + 1):
        q = Posterior(theta)
        val, grad, mg, cert = _evaluate(alg, pm, q, prior, cfg)
        mom = mg.moments
        trace.append({"step": t, "objective": val, "r_S": mom.r, "d_S": mom.d, "e_S": mom.e,
                      "KL": mg.kl, "bound": cert.value})
        if t == cfg.iterations:
            break
        if grad is None:
            # transient infeasibility of the worst-case search: skip, do not abort
            skipped += 1
            log.warning("step %d: empty (e, d) region, update skipped", t)
            continue
        if not (math.isfinite(val) and np.all(np.isfinite(grad))):
            raise TrainingError(f"non-finite objective at step {t}", trace)
        if state is not None:
            state = update_coin_betting(state, grad)
            theta = state.theta
        else:
            theta = update_plain_gd(theta, grad, cfg.step)
        if not np.all(np.isfinite(theta)):
            raise TrainingError(f"non-finite scores after step {t}", trace)
    return LearnResult(Posterior(theta), cert, trace, skipped)


def write_trace(trace, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        w.writeheader()
        for row in trace:
            w.writerow({k: (repr(float(v)) if k != "step" else int(v)) for k, v in row.items()})


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
