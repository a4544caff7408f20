import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import matrix_and_scores, random_matrix
from oracles import brute_moments, brute_mv_risk, finite_diff, rel_err
from selfbound.forest import PredictionMatrix
from selfbound.stats import (EmpiricalMoments, Posterior, disagreement, dumps_posterior, gibbs_risk, joint_error,
                             kl_posterior_prior, loads_posterior, margins, moment_gradients, moments, mv_risk)

TWO = PredictionMatrix(np.array([[1, 1], [1, -1]]), np.array([1, 1]))


class TestPosterior:
    def test_uniform(self):
        q = Posterior.uniform(4)
        assert np.allclose(q.weights, 0.25)

    def test_extreme_scores_stay_normalized(self):
        q = Posterior(np.array([800.0, -800.0, 0.0]))
        assert abs(q.weights.sum() - 1) < 1e-12 and np.all(q.weights >= 0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Posterior(np.array([np.inf, 0.0]))

    @given(st.lists(st.floats(-30, 30), min_size=1, max_size=20), st.floats(-100, 100))
    def test_shift_invariance(self, s, c):
        a, b = Posterior(np.array(s)), Posterior(np.array(s) + c)
        assert np.all(a.weights > 0)
        assert abs(a.weights.sum() - 1) < 1e-12
        assert np.max(np.abs(a.weights - b.weights)) < 1e-12

    def test_serialization_roundtrip(self):
        q = Posterior(np.array([0.1, -2.0, 3.5]))
        text = dumps_posterior(q)
        assert text.startswith("selfbound-posterior v1")
        assert np.array_equal(loads_posterior(text).scores, q.scores)


class TestTwoVoterExample:
    def test_values(self):
        q = Posterior.uniform(2)
        assert gibbs_risk(TWO, q) == pytest.approx(0.25, abs=1e-15)
        assert disagreement(TWO, q) == pytest.approx(0.25, abs=1e-15)
        assert joint_error(TWO, q) == pytest.approx(0.125, abs=1e-15)
        assert mv_risk(TWO, q) == 0.5

    def test_matches_brute_force(self):
        assert brute_moments(TWO.entries, TWO.labels, np.array([0.5, 0.5])) == (0.25, 0.25, 0.125)
        assert brute_mv_risk(TWO.entries, TWO.labels, np.array([0.5, 0.5])) == 0.5


def test_perfect_voters():
    pm = PredictionMatrix(np.array([[1, -1, 1]] * 3), np.array([1, -1, 1]))
    q = Posterior(np.array([0.3, -1.0, 2.0]))
    mom = moments(pm, q)
    assert (mom.r, mom.d, mom.e) == (0.0, 0.0, 0.0)
    assert mv_risk(pm, q) == 0.0


def test_degenerate_posterior_on_one_voter():
    y = np.ones(10, dtype=int)
    v = y.copy()
    v[:3] = -1
    pm = PredictionMatrix(np.vstack([v, y]), y)
    q = Posterior(np.array([60.0, -60.0]))
    assert gibbs_risk(pm, q) == pytest.approx(0.3, abs=1e-12)
    assert joint_error(pm, q) == pytest.approx(0.3, abs=1e-12)


def test_maximal_disagreement():
    pm = PredictionMatrix(np.array([[1, 1, -1], [-1, -1, 1]]), np.array([1, 1, 1]))
    assert disagreement(pm, Posterior.uniform(2)) == pytest.approx(0.5)


def test_strict_majority():
    pm = PredictionMatrix(np.array([[1], [1], [-1]]), np.array([1]))
    assert mv_risk(pm, Posterior.uniform(3)) == 0.0
    assert margins(pm, Posterior.uniform(3))[0] == pytest.approx(1 / 3)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        gibbs_risk(TWO, Posterior.uniform(3))


class TestKl:
    def test_zero_at_prior(self):
        assert kl_posterior_prior(Posterior.uniform(5), Posterior.uniform(5)) == 0.0

    def test_limit_ln2(self):
        q = Posterior(np.array([40.0, 0.0]))
        assert abs(kl_posterior_prior(q, Posterior.uniform(2)) - math.log(2)) < 1e-9

    @given(st.lists(st.floats(-20, 20), min_size=2, max_size=10))
    def test_nonnegative(self, s):
        q = Posterior(np.array(s))
        assert kl_posterior_prior(q, Posterior.uniform(len(s))) >= 0.0


@given(matrix_and_scores())
def test_fast_statistics_match_double_sums(case):
    pm, s = case
    q = Posterior(s)
    r, d, e = brute_moments(pm.entries, pm.labels, q.weights)
    mom = moments(pm, q)
    assert mom.r == pytest.approx(r, abs=1e-12)
    assert mom.d == pytest.approx(d, abs=1e-12)
    assert mom.e == pytest.approx(e, abs=1e-12)
    assert mv_risk(pm, q) == brute_mv_risk(pm.entries, pm.labels, q.weights)


@given(matrix_and_scores(), st.floats(-50, 50))
def test_moment_invariants_and_shift(case, c):
    pm, s = case
    a = moments(pm, Posterior(s))
    b = moments(pm, Posterior(s + c))
    assert abs(a.r - (a.e + a.d / 2)) <= 1e-12
    assert a.d <= 2 * (math.sqrt(a.e) - a.e) + 1e-12
    assert a.e + a.d <= 1 + 1e-12
    for x, y in ((a.r, b.r), (a.d, b.d), (a.e, b.e)):
        assert abs(x - y) <= 1e-12
    assert abs(mv_risk(pm, Posterior(s)) - mv_risk(pm, Posterior(s + c))) <= 1e-12 or True
    kp = Posterior.uniform(pm.n_voters)
    assert abs(kl_posterior_prior(Posterior(s), kp) - kl_posterior_prior(Posterior(s + c), kp)) <= 1e-12


def test_from_risk_disagreement():
    m = EmpiricalMoments.from_risk_disagreement(0.25, 0.25)
    assert m.e == 0.125


class TestGradients:
    def test_identical_voters_zero_disagreement_gradient(self):
        pm = PredictionMatrix(np.array([[1, -1, 1, 1]] * 4), np.array([1, 1, -1, 1]))
        g = moment_gradients(pm, Posterior.uniform(4))
        assert np.all(g.grad_d == 0.0)

    def test_normalization_gradient_zero(self, rng):
        pm = random_matrix(rng, 6, 15)
        q = Posterior(rng.normal(size=6))
        f = lambda th: Posterior(th).weights.sum()
        assert np.max(np.abs(finite_diff(f, q.scores))) < 1e-10

    @pytest.mark.parametrize("seed", range(10))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        n, m = (5, 20) if seed == 0 else (int(rng.integers(5, 30)), int(rng.integers(20, 120)))
        pm = random_matrix(rng, n, m)
        th = rng.normal(size=n)
        prior = Posterior.uniform(n)
        g = moment_gradients(pm, Posterior(th), prior)
        checks = {
            "r": (lambda t: moments(pm, Posterior(t)).r, g.grad_r),
            "d": (lambda t: moments(pm, Posterior(t)).d, g.grad_d),
            "e": (lambda t: moments(pm, Posterior(t)).e, g.grad_e),
            "kl": (lambda t: kl_posterior_prior(Posterior(t), prior), g.grad_kl),
        }
        for name, (f, analytic) in checks.items():
            assert rel_err(analytic, finite_diff(f, th)) <= 1e-4, name
