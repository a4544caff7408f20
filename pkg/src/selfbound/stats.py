"""Posteriors over voters and the empirical moments of their majority vote.

Every statistic is computed in O(n m) from two per-example aggregates:
the error mass w_i = sum_j Q_j [h_j(x_i) != y_i] and the positive-vote mass
p_i = sum_j Q_j [h_j(x_i) = +1].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .forest import PredictionMatrix

POSTERIOR_FORMAT = "selfbound-posterior v1"


@dataclass(frozen=True)
class Posterior:
    """Categorical distribution over voters, Q = softmax(scores)."""

    scores: np.ndarray

    def __post_init__(self):
        s = np.array(self.scores, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("scores must be a nonempty vector")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        s.flags.writeable = False
        object.__setattr__(self, "scores", s)
        z = np.exp(s - s.max())
        w = z / z.sum()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> "Posterior":
        return cls(np.zeros(n))

    def __len__(self) -> int:
        return self.scores.size


@dataclass(frozen=True)
class EmpiricalMoments:
    gibbs_risk: float
    disagreement: float
    joint_error: float

    @property
    def r(self) -> float:
        return self.gibbs_risk

    @property
    def d(self) -> float:
        return self.disagreement

    @property
    def e(self) -> float:
        return self.joint_error

    @classmethod
    def from_risk_disagreement(cls, r: float, d: float) -> "EmpiricalMoments":
        return cls(r, d, r - d / 2.0)


def _check(pm: PredictionMatrix, q: Posterior) -> np.ndarray:
    if len(q) != pm.n_voters:
        raise ValueError(f"posterior has {len(q)} weights but there are {pm.n_voters} voters")
    return q.weights


def error_mass(pm: PredictionMatrix, q: Posterior) -> np.ndarray:
    return _check(pm, q) @ pm.errors


def positive_mass(pm: PredictionMatrix, q: Posterior) -> np.ndarray:
    return _check(pm, q) @ pm.positives


def gibbs_risk(pm: PredictionMatrix, q: Posterior) -> float:
    return float(np.mean(error_mass(pm, q)))


def disagreement(pm: PredictionMatrix, q: Posterior) -> float:
    p = positive_mass(pm, q)
    return float(np.mean(2.0 * p * (1.0 - p)))


def joint_error(pm: PredictionMatrix, q: Posterior) -> float:
    return float(np.mean(error_mass(pm, q) ** 2))


def moments(pm: PredictionMatrix, q: Posterior) -> EmpiricalMoments:
    w = error_mass(pm, q)
    p = positive_mass(pm, q)
    return EmpiricalMoments(float(np.mean(w)), float(np.mean(2.0 * p * (1.0 - p))), float(np.mean(w**2)))


def margins(pm: PredictionMatrix, q: Posterior) -> np.ndarray:
    """y_i * sum_j Q_j h_j(x_i)."""
    return pm.labels * (_check(pm, q) @ pm.entries.astype(float))


def mv_risk(pm: PredictionMatrix, q: Posterior) -> float:
    """Majority-vote error rate; a zero margin counts as an error."""
    return float(np.mean(margins(pm, q) <= 0.0))


def kl_posterior_prior(q: Posterior, p: Posterior) -> float:
    if len(q) != len(p):
        raise ValueError("posterior and prior sizes differ")
    qw, pw = q.weights, p.weights
    nz = qw > 0
    return max(0.0, float(np.sum(qw[nz] * np.log(qw[nz] / pw[nz]))))


def score_gradient(q: Posterior, grad_weights: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. the weights Q back to the unconstrained scores."""
    w = q.weights
    return w * (grad_weights - np.dot(w, grad_weights))


@dataclass(frozen=True)
class MomentGradients:
    """Values of (r_S, d_S, e_S, KL) and their gradients w.r.t. the posterior scores."""

    moments: EmpiricalMoments
    kl: float
    grad_r: np.ndarray
    grad_d: np.ndarray
    grad_e: np.ndarray
    grad_kl: np.ndarray


def moment_gradients(pm: PredictionMatrix, q: Posterior, prior: Posterior | None = None) -> MomentGradients:
    qw = _check(pm, q)
    if prior is None:
        prior = Posterior.uniform(len(q))
    m = pm.m
    w = qw @ pm.errors
    p = qw @ pm.positives
    mom = EmpiricalMoments(float(np.mean(w)), float(np.mean(2.0 * p * (1.0 - p))), float(np.mean(w**2)))

    gw_r = pm.errors.mean(axis=1)
    gw_e = pm.errors @ (2.0 * w) / m
    gw_d = pm.positives @ (2.0 - 4.0 * p) / m
    nz = qw > 0
    gw_kl = np.zeros_like(qw)
    gw_kl[nz] = np.log(qw[nz] / prior.weights[nz]) + 1.0
    return MomentGradients(
        moments=mom,
        kl=kl_posterior_prior(q, prior),
        grad_r=score_gradient(q, gw_r),
        grad_d=score_gradient(q, gw_d),
        grad_e=score_gradient(q, gw_e),
        grad_kl=score_gradient(q, gw_kl),
    )


def dumps_posterior(q: Posterior) -> str:
    lines = [POSTERIOR_FORMAT, f"n_voters {len(q)}", "index,score,weight"]
    lines += [f"{i},{s!r},{w!r}" for i, (s, w) in enumerate(zip(q.scores.tolist(), q.weights.tolist()))]
    return "\n".join(lines) + "\n"


def loads_posterior(text: str) -> Posterior:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != POSTERIOR_FORMAT:
        raise ValueError(f"not a {POSTERIOR_FORMAT!r} record")
    n = int(lines[1].split()[1])
    scores = [float(ln.split(",")[1]) for ln in lines[3:]]
    if len(scores) != n:
        raise ValueError(f"expected {n} scores, found {len(scores)}")
    return Posterior(np.array(scores))


def save_posterior(q: Posterior, path) -> None:
    Path(path).write_text(dumps_posterior(q), encoding="utf-8")


def load_posterior(path) -> Posterior:
    return loads_posterior(Path(path).read_text(encoding="utf-8"))
