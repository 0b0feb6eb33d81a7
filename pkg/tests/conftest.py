import numpy as np
import pytest

from latticeaddr import lightshift as ls
from latticeaddr import optics, sequence as sq
from latticeaddr.model import make_units

LAMBDA = 850e-9


@pytest.fixture(scope="session")
def units():
    return make_units(LAMBDA)


@pytest.fixture(scope="session")
def geometry():
    return optics.DEFAULT_GEOMETRY


@pytest.fixture(scope="session")
def profile(geometry):
    # 1.5 lambda covers sites out to the diagonal of the 2-D maps
    return optics.intensity_map(geometry, 1.5 * LAMBDA, 301, tol=1e-10)


@pytest.fixture(scope="session")
def lines():
    return ls.bundled_lines("rb87_6p")


@pytest.fixture(scope="session")
def shifts(profile, lines, units):
    return ls.shift_map(profile, lines, units, ls.Calibration("calibrated", 107.0))


@pytest.fixture(scope="session")
def ramp(shifts):
    return sq.ramp_schedule(shifts, 50.0, 0.005)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
