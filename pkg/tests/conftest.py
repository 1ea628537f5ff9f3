import numpy as np
import pytest

from spectrace.presets import example1
from spectrace.systems import build_from_jordan

# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def ex1():
    spec, b, c = example1()
    return spec, build_from_jordan(spec, b, c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
