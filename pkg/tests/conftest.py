import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mullins_sekerka.grid import Grid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a one-line verdict for the acceptance summary."""
    def _report(criterion: int, title: str, passed: bool, detail: str):
        line = f"[criterion {criterion}] {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append((criterion, line))
        print(line)
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def gauss():
    def make(grid: Grid, amp: float = 1.0, width: float = 1.0):
        return grid.sample(lambda x: amp * np.exp(-(x / width) ** 2))
    return make
