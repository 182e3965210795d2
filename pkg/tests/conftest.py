import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from parabolic_lp import validate_matrix

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MATRICES = {
    "identity": [[1.0, 0.0], [0.0, 1.0]],
    "diag12": [[1.0, 0.0], [0.0, 2.0]],
    "rotation": [[1.0, 1.0], [-1.0, 1.0]],
}

# criterion lines collected by tests/test_acceptance.py, printed once at the end
ACCEPTANCE = {}


@pytest.fixture(params=sorted(MATRICES))
def group(request):
    return validate_matrix(MATRICES[request.param])


@pytest.fixture
def diag12():
    return validate_matrix(MATRICES["diag12"])


@pytest.fixture
def rotation():
    return validate_matrix(MATRICES["rotation"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion and return the verdict."""

    def report(number, title, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
