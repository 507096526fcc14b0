import warnings

import pytest
from hypothesis import HealthCheck, settings

from freewass.families import bernoulli, scaled_semicircle, smooth_family, smoothed_bernoulli
from freewass.measure import semicircle

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def sc():
    return semicircle(0.0, 1.0, label="semicircle")


@pytest.fixture(scope="session")
def sc2():
    return scaled_semicircle(2.0)


@pytest.fixture(scope="session")
def family():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return smooth_family()


@pytest.fixture(scope="session")
def sb(family):
    return family["smooth_bernoulli"]


@pytest.fixture(scope="session")
def bern():
    return bernoulli()


@pytest.fixture(scope="session")
def sb_coarse():
    """Cauchy-smoothed Bernoulli on a coarser grid for quick flow tests."""
    return smoothed_bernoulli(0.1, n_grid=1024)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance lines (one per criterion) after the run."""
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
