"""Shared pytest wiring: collects acceptance verdict lines for the summary."""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Callable recording one printed pass/fail line per acceptance check."""
    def record(index, name, ok, detail):
        line = (f"ACCEPTANCE {index} {name}: "
                f"{'PASS' if ok else 'FAIL'} ({detail})")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
