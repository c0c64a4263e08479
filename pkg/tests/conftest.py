from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from poisson_chaos.functions import coordinate
from poisson_chaos.measures import IntensityMeasure
from poisson_chaos.window import Window

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SEED = 20261018
X = coordinate()


@pytest.fixture
def sigma():
    return IntensityMeasure.lebesgue(Window.interval(0, 2))


@pytest.fixture
def unit_sigma():
    return IntensityMeasure.lebesgue(Window.interval(0, 1))


@pytest.fixture
def half():
    return Fraction(1, 2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(str(k).rstrip("abc")), str(k))):
        terminalreporter.write_line(RESULTS[key])
