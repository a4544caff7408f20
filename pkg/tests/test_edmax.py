
import numpy as np
import pytest

from cases import battery
from oracles import grid_sup_cl
from selfbound.edmax import ALPHA_TOL, cl, d_ceiling, kl_trinary_vec, max_rounds, maximize_e_d
from selfbound.kl import kl_trinary


def test_cl_basic():
    assert cl(0.125, 0.25) == pytest.approx(0.5)
    assert cl(0.3, 0.5) == 1.0 and cl(0.4, 0.3) == 1.0
    assert cl(0.0, 0.0) == 0.0


def test_vector_kl_matches_scalar():
    p1, p2 = np.array([0.1, 0.2]), np.array([0.3, 0.25])
    v = kl_trinary_vec(0.15, 0.2, p1, p2)
    assert v[0] == pytest.approx(kl_trinary(0.15, 0.2, 0.1, 0.3))
    assert v[1] == pytest.approx(kl_trinary(0.15, 0.2, 0.2, 0.25))


def test_zero_kappa_returns_input():
    p = maximize_e_d(0.1, 0.2, 0.0)
    assert (p.e, p.d, p.feasible) == (0.1, 0.2, True)
    assert p.objective == pytest.approx(cl(0.1, 0.2))


def test_huge_kappa():
    p = maximize_e_d(0.1, 0.2, 10.0)
    assert p.feasible and p.objective >= 0.999
    assert grid_sup_cl(0.1, 0.2, 10.0) >= 0.999


def test_example_matches_oracle():
    p = maximize_e_d(0.1, 0.3, 0.01)
    assert abs(p.objective - 0.5899146919431278) <= 1e-3


def test_round_budget():
    assert max_rounds(ALPHA_TOL) == 7
    for e, d, k in battery(10, seed=5):
        assert maximize_e_d(e, d, k).rounds <= max_rounds(ALPHA_TOL)


def test_negative_kappa():
    with pytest.raises(ValueError):
        maximize_e_d(0.1, 0.1, -1.0)


@pytest.mark.parametrize("case", battery(12, seed=7))
def test_constraints_hold(case):
    e_s, d_s, k = case
    p = maximize_e_d(e_s, d_s, k)
    assert p.feasible
    assert p.d <= d_ceiling(p.e) + 1e-9 and p.d < 0.5
    assert kl_trinary(e_s, d_s, p.e, p.d) <= k + 1e-9
    assert p.objective >= cl(e_s, d_s) - 1e-12


@pytest.mark.parametrize("case", battery(8, seed=3))
def test_battery_sample_against_grid(case):
    e_s, d_s, k = case
    assert abs(maximize_e_d(e_s, d_s, k).objective - grid_sup_cl(e_s, d_s, k)) <= 1e-3
