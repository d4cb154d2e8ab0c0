import numpy as np
import pytest

from mmwave_pgp.channel import CellGeometry, PropagationParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def geom():
    return CellGeometry()


@pytest.fixture
def prop():
    return PropagationParams()


def random_complex(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
