import numpy as np
import pytest
from hypothesis import settings

from bo2d import spectral as sp

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_band_field(grid, rng, band=3):
    """Real trigonometric polynomial with |m|, |n| <= band."""
    X, Y = grid.meshgrid()
    u = np.zeros(grid.shape)
    for m in range(-band, band + 1):
        for n in range(-band, band + 1):
            kx, ky = grid.wavenumber(m, n)
            u += rng.standard_normal() * np.cos(kx * X + ky * Y) + rng.standard_normal() * np.sin(kx * X + ky * Y)
    return sp.RealField(grid, u)


def zero_xmean(F):
    c = F.coeffs.copy()
    c[0, :] = 0.0
    return F.with_coeffs(c)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
