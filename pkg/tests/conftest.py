"""Shared fixtures: a recorder that prints one line per acceptance check."""
import pytest

_acceptance_lines = []


@pytest.fixture
def acceptance():
    """Record a one-line measured result, echoed after the run."""

    def record(line: str):
        _acceptance_lines.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance summary")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
