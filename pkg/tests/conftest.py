import warnings

import pytest

from cavity_eit import SimulationConfig, run_sequence

WAIST = 37e-6


@pytest.fixture(scope="session")
def extended_config():
    return SimulationConfig.baseline(extended=True)


@pytest.fixture(scope="session")
def finite_config():
    return SimulationConfig.baseline(extended=False, A=2.45)


@pytest.fixture(scope="session")
def extended_result(extended_config):
    return run_sequence(extended_config)


@pytest.fixture(scope="session")
def finite_result(finite_config):
    return run_sequence(finite_config)


@pytest.fixture(autouse=True)
def _quiet_adiabatic():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
