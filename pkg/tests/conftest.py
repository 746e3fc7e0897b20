import numpy as np
import pytest

from brakeplan import PenaltyField

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def record(key, ok, detail):
    ACCEPTANCE_LINES[key] = f"{'PASS' if ok else 'FAIL'}  {key}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def wall_field():
    """W = 1 from 40 m onwards at every time, zero before."""
    ds = 0.25
    s = np.arange(800) * ds
    vals = np.tile((s >= 40.0).astype(float), (100, 1))
    return PenaltyField(vals, 0.1, ds)
