import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from kinreg import _accel  # noqa: E402


@pytest.fixture(params=["numba", "numpy"] if _accel.HAS_NUMBA else ["numpy"])
def backend(request):
    """Run a test once per available backend."""
    prev = _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(prev)


def pytest_terminal_summary(terminalreporter):
    import _report

    if _report.LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_report.LINES):
            terminalreporter.write_line(line)
