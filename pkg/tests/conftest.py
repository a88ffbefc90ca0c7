import numpy as np
import pytest

from nvlab.torus import SpectralField, TorusGrid, symmetrize


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(grid, rng, real=False, band=None):
    c = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    if band is not None:
        c[(np.abs(grid.xi) > band) | (np.abs(grid.eta) > band)] = 0
    if real:
        c = symmetrize(grid, c)
        c[grid.nyquist_mask] = 0
    c[0, 0] = 0
    return SpectralField(grid, c, True, real)


@pytest.fixture
def grid16():
    return TorusGrid(16, 16)


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """record(n, ok, detail) files one PASS/FAIL line for the run summary."""
    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
