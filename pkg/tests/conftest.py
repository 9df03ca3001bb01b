import numpy as np
import pytest

from dhg.holo import induced_structure
from dhg.instances import random_immersion
from dhg.mesh import RegularTorus, fundamental_domain


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="module")
def nine_point():
    """Seeded random immersion of the 3x3 torus with its structure and domain."""
    torus = RegularTorus(((3, 0), (0, 3)))
    f = random_immersion(torus, np.random.default_rng(7))
    hs = induced_structure(torus, f)
    return torus, f, hs, fundamental_domain(torus)


def random_quats(rng, *shape):
    return rng.normal(size=shape + (4,))
