import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from selfbound.forest import PredictionMatrix  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def random_matrix(rng: np.random.Generator, n: int, m: int, flip: float | None = None) -> PredictionMatrix:
    """Voters that each agree with the label with their own probability."""
    y = rng.choice([-1, 1], size=m)
    acc = rng.uniform(0.3, 0.95, size=n) if flip is None else np.full(n, 1 - flip)
    right = rng.uniform(size=(n, m)) < acc[:, None]
    return PredictionMatrix(np.where(right, y, -y), y)


@st.composite
def matrices(draw, max_n: int = 8, max_m: int = 30):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    h = draw(st.lists(st.lists(st.sampled_from([-1, 1]), min_size=m, max_size=m), min_size=n, max_size=n))
    y = draw(st.lists(st.sampled_from([-1, 1]), min_size=m, max_size=m))
    return PredictionMatrix(np.array(h), np.array(y))


@st.composite
def matrix_and_scores(draw, max_n: int = 8, max_m: int = 30):
    pm = draw(matrices(max_n, max_m))
    s = draw(st.lists(st.floats(-5, 5), min_size=pm.n_voters, max_size=pm.n_voters))
    return pm, np.array(s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[k])
