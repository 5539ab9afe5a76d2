"""Shared test plumbing: a metrics log that survives output capture.

Acceptance tests append measured figures (BER crossings, estimator error,
runtimes) to this log; the terminal-summary hook prints them after the
test results so they land in piped output without needing -s.
"""

import pytest

ACCEPTANCE_METRICS: list[str] = []


@pytest.fixture(scope="session")
def criterion_log():
    return ACCEPTANCE_METRICS


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_METRICS:
        terminalreporter.section("acceptance metrics")
        for line in ACCEPTANCE_METRICS:
            terminalreporter.write_line(line)
