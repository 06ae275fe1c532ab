import sys
from pathlib import Path

import pytest

from pnsqkd import baseline as _baseline

# oracles.py lives next to the tests
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def base():
    return _baseline()


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
