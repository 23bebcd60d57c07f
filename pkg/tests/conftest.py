import os
import time

import pytest
from hypothesis import HealthCheck, settings

from noncomp_lab.planarflow import default_prefix
from noncomp_lab.recursion import synthetic_prefix

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def prefix():
    """The dovetailed enumeration of the standard machine family at budget 128."""
    return default_prefix(128)


@pytest.fixture(scope="session")
def small_prefix():
    return synthetic_prefix([3, 1, 4, 6, 9, 12, 15, 20, 25, 30])


def _timed_basin(spec: str):
    from noncomp_lab.classifier import compute_basin
    from noncomp_lab.fields import build_field

    start = time.perf_counter()
    grid = compute_basin(build_field(spec), 1, 16, level=8)
    grid.elapsed = time.perf_counter() - start
    return grid


@pytest.fixture(scope="session")
def radial_basin():
    """Basin of the origin for the radial oracle field (repelling cycle at radius 3/5), k = 16, level 8."""
    return _timed_basin("radial")


@pytest.fixture(scope="session")
def two_well_basin():
    """Basin of the left well (-1, 0) of the two-well gradient field, k = 16, level 8."""
    return _timed_basin("two_well")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
