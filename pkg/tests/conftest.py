import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ptl", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ptl")


@pytest.fixture(scope="session")
def dimer():
    from ptl.model import dimer_spec
    return dimer_spec(0.5)


@pytest.fixture(scope="session")
def anderson():
    from ptl.model import anderson_spec
    return anderson_spec()


@pytest.fixture(scope="session")
def free():
    from ptl.model import build_spec
    return build_spec([1.0], [0.0], [1.0], [0.0], 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from acceptance_support import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for key in sorted(REPORT, key=lambda k: (int(k.rstrip("abcd")), k)):
            terminalreporter.write_line(REPORT[key])
