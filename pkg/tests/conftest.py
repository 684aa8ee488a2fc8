import sys

import pytest

from whlab.grids import HalfLine, Line


@pytest.fixture(scope="session")
def half_line():
    """A coarse half-line grid for fast operator checks."""
    return HalfLine(40.0, 256)


@pytest.fixture(scope="session")
def line():
    return Line(20.0, 256)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance PASS/FAIL lines after the test run."""
    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
