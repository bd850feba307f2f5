from pathlib import Path

import pytest

TABLES = Path(__file__).resolve().parents[1] / "tables"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def tables_dir():
    return TABLES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
