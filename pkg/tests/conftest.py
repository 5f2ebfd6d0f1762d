import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from susyqm.grid import RealField, make_grid
from susyqm.units import ModelUnits

settings.register_profile("susyqm", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("susyqm")

# first excited level of x^6 + 4x^4 + x^2 - 2 (lambda = 1), harmonic-oscillator basis of 220 states
SEXTIC_E1 = 5.024447873403185
SEXTIC_LEVELS = np.array([0.0, 5.024447873403185, 11.696818765886828, 19.497655314379653, 28.237859972483296])


@pytest.fixture(scope="session")
def units():
    return ModelUnits()


@pytest.fixture(scope="session")
def ho_grid():
    return make_grid(-8, 8, 101)


def gaussian_state(grid, center=0.0, width=1.0):
    x = grid.points
    return RealField(grid, np.exp(-((x - center) ** 2) / (2 * width**2))).normalized()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "::test_criterion_" in rep.nodeid:
                detail = dict(rep.user_properties).get("detail", "")
                name = rep.nodeid.split("::test_criterion_")[1]
                lines.append((int(name.split("_")[0]), f"criterion {name}: {outcome == 'passed' and 'PASS' or 'FAIL'}  {detail}"))
    if lines:
        terminalreporter.section("acceptance")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
