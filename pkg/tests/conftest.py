"""Shared fixtures and reporting hooks for the test suite."""

from contextlib import contextmanager

import pytest
from hypothesis import HealthCheck, settings

from beliefbench.blockworld import default_table
from beliefbench.experts import OracleExpert, elicit

# One derandomized profile for the whole suite: property sweeps must give the
# same verdict on every run.
settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=200,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture(scope="session")
def oracle_report(table):
    return elicit(OracleExpert(), table)


# The acceptance tests push one line per criterion here; the summary hook
# prints them after the run so the verdicts are visible without -s.
_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.line(line)


@pytest.fixture(scope="session")
def acceptance():
    """Context manager that turns a criterion block into a PASS/FAIL line."""

    @contextmanager
    def criterion(label: str):
        try:
            yield
        except BaseException:
            record_acceptance(f"{label}: FAIL")
            raise
        record_acceptance(f"{label}: PASS")

    return criterion
