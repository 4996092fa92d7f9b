import numpy as np
import pytest

from hartree_lab.grid import Field, Grid, make_grid

ACCEPTANCE_LINES: list[str] = []


def random_field(grid: Grid, seed: int = 0, decay: float = 0.0) -> Field:
    """Complex Gaussian spectrum, optionally damped by <xi>^(-decay)."""
    rng = np.random.default_rng(seed)
    uh = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if decay:
        uh = uh * (1.0 + grid.xi2) ** (-decay / 2)
    return Field(grid, uh, "spectral").physical()


def relerr(a, b) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


@pytest.fixture
def g8():
    return make_grid(3, 8, 2 * np.pi)


@pytest.fixture
def g4():
    return make_grid(3, 4, 2 * np.pi)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
