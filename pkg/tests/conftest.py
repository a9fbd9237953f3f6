import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mpdirac import new_black_hole  # noqa: E402


@pytest.fixture(scope="session")
def bh():
    return new_black_hole(10.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def bh_generic():
    """Unequal rotation parameters so that a <-> b mix-ups are visible."""
    return new_black_hole(10.0, 1.3, 0.6)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
