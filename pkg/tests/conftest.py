import numpy as np
import pytest

from scalarfield import assemble_green, build_grid, poisson_trace


@pytest.fixture(scope="session")
def grid_line():
    """N = 1 reference grid: half line truncated at 20, 1000 graded nodes."""
    return build_grid(1, 20.0, 20.0, 1, 1000)


@pytest.fixture(scope="session")
def K_line(grid_line):
    return assemble_green(grid_line)


@pytest.fixture(scope="session")
def Pmu_line(grid_line):
    return poisson_trace(grid_line, {"type": "point_mass", "mass": 1.0})


def soliton(heights, kappa, p=3.0):
    """Exact minimal solution on the half line for p = 3: sqrt(2) sech(x + a)
    with sech(a) = kappa / sqrt(2)."""
    assert p == 3.0
    a = np.arccosh(np.sqrt(2.0) / kappa)
    return np.sqrt(2.0) / np.cosh(heights + a)
