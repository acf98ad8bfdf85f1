import pytest

import utils.logger as logger
from backend.spectral_core import PhysicsParams, make_grid
from components.factories.field_factory import create_random_smooth_field
from utils.utils import stream_generator


@pytest.fixture(autouse=True)
def quiet_logs():
    logger.set_verbosity(logger.QUIET)
    yield
    logger.set_verbosity(logger.NORMAL)


@pytest.fixture
def grid2():
    return make_grid(2, 64, 8.0)


@pytest.fixture
def grid3():
    return make_grid(3, 32, 6.0)


@pytest.fixture
def params2():
    """N=2, p=4 (mass-critical), a=1, |Ω|=0.1."""
    return PhysicsParams(dim=2, a=1.0, p=4.0, omega_mag=0.1)


@pytest.fixture
def params3():
    """N=3, p=4 (mass-supercritical), a=1, |Ω|=0.1."""
    return PhysicsParams(dim=3, a=1.0, p=4.0, omega_mag=0.1)


@pytest.fixture
def random_field():
    def build(grid, index=0, seed=7):
        return create_random_smooth_field(grid, stream_generator(seed, "test", index))

    return build
