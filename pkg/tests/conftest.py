import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def dists(min_k=2, max_k=12, k=None):
    """Hypothesis strategy for probability vectors, with some exact zeros."""
    size = st.just(k) if k is not None else st.integers(min_k, max_k)

    @st.composite
    def build(draw):
        kk = draw(size)
        w = draw(st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 10.0)), min_size=kk, max_size=kk))
        w = np.asarray(w)
        if w.sum() == 0:
            w[draw(st.integers(0, kk - 1))] = 1.0
        return w / w.sum()

    return build()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
