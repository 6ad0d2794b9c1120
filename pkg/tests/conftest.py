import functools

import pytest

from pathmark.harness import load_catalog
from pathmark.optics import ExperimentConfig, simulate

# Fraunhofer quadrature of the closed-form slit patterns over six ideal
# dark-fringe wires (odd multiples of half a fringe, width = period / 12),
# default geometry.  Computed with scipy.integrate.quad; see
# test_optics.test_wire_oracle_recomputes.
ORACLE_ABSORBED_DOUBLE = 0.0005971623612436428
ORACLE_ABSORBED_SINGLE_A = 0.0524522397492944


@functools.lru_cache(maxsize=None)
def cached_simulation(**changes):
    return simulate(ExperimentConfig(**changes))


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def sim():
    return cached_simulation


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
