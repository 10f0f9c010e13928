import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hormander.sampled import GridFunction, generate

settings.register_profile(
    "default",
    deadline=None,
    max_examples=int(os.environ.get("HYPOTHESIS_MAX_EXAMPLES", "40")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# small grids keep the unit tests fast; acceptance runs use the desk size
SMALL_L = 64.0
SMALL_N = 2**11


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bump():
    return generate("bump", {"center": 3.0, "radius": 2.0}, SMALL_L, SMALL_N)


def random_grid(rng, L=SMALL_L, N=SMALL_N, support=None):
    vals = rng.normal(size=N)
    g = GridFunction(L, vals)
    if support is not None:
        a, b = support
        vals = np.where((g.x > a) & (g.x < b), vals, 0.0)
    return GridFunction(L, vals)
