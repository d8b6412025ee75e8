import math

import pytest

from gwdeco.apparatus import Geometry
from gwdeco.constants import HBAR


def unit_geometry(sin_alpha=0.01, tau=1.0, coupling=1.0, T=None):
    """Geometry with Omega sin(alpha) = ``coupling`` rad/s at v = 1 m/s."""
    omega = coupling / sin_alpha if sin_alpha > 0 else coupling
    return Geometry.build(mass=2.0 * HBAR * omega, velocity=1.0, sin_alpha=sin_alpha,
                          tau=tau, T=T)


@pytest.fixture
def unit_geom():
    return unit_geometry()


@pytest.fixture
def flat():
    from gwdeco.spectra import PlateauSpectrum
    return PlateauSpectrum(S0=1.0, omega_low=0.0, omega_high=math.inf)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
