"""Shared fixtures and the acceptance summary printed at the end of a run."""

import numpy as np
import pytest

from kgoplab.space import GridSpec, WeightSpec

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def rel():
    return WeightSpec.relativistic(1.0)


@pytest.fixture
def grid1():
    return GridSpec(1, 0.25, 8.0)


@pytest.fixture
def grid2():
    return GridSpec(2, 0.5, 4.0)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        if report.failed or name not in _ACCEPTANCE:
            _ACCEPTANCE[name] = "FAIL" if report.failed else ("SKIP" if report.skipped else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{_ACCEPTANCE[name]} {name}")
