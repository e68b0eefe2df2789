import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from string_spectra import collocation, density  # noqa: E402


@pytest.fixture(scope="session")
def parabolic1():
    return density.parabolic(1.0)


@pytest.fixture(scope="session")
def parabolic_spectrum(parabolic1):
    return collocation.solve_spectrum(parabolic1, 2000, 20)


@pytest.fixture(scope="session")
def borg10_spectrum():
    return collocation.solve_spectrum(density.borg(10.0), 2000, 10)


@pytest.fixture(scope="session")
def borg10_dens():
    return density.quadrature_density(density.borg(10.0), 4001)


@pytest.fixture(scope="session")
def parabolic_dens(parabolic1):
    return density.quadrature_density(parabolic1, 4001)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
