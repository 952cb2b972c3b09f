import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mep3.core import ThreeParamProblem

settings.register_profile("default", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_problem(rng, sizes=(2, 2, 2), complex_=False):
    """Dense random problem with well-conditioned ``A_j``."""
    def mat(n):
        m = rng.standard_normal((n, n))
        if complex_:
            m = m + 1j * rng.standard_normal((n, n))
        return m
    mats = {k: tuple(mat(n) for n in sizes) for k in "BCD"}
    mats["A"] = tuple(mat(n) + 3 * n * np.eye(n) for n in sizes)
    return ThreeParamProblem(**mats)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
