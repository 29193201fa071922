import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from henonpucci import ProblemParams

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def C1():
    return ProblemParams(1.0, 1.5, 4, 4.0, 0.0)


@pytest.fixture
def semilinear():
    return ProblemParams(1.0, 1.0, 3, 6.0, 0.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
