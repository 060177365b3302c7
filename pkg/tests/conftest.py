import math

import pytest
from hypothesis import settings

from esc_lab import DisturbanceSpec, DitherSpec, EsParams, integrator_plant, unicycle_plant

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def spec1():
    """Single-channel dither with alpha = 1/4, c = varpi = 1."""
    return DitherSpec.uniform(1, 0.25, 1.0)


@pytest.fixture
def integrator():
    return integrator_plant()


@pytest.fixture
def unicycle():
    return unicycle_plant()


@pytest.fixture
def params_int():
    return EsParams(1.0, 10.0, 1.0)


@pytest.fixture
def params_uni():
    return EsParams(1.0, 10.0, 1.0, Omega=1.0)


@pytest.fixture
def no_dist():
    return DisturbanceSpec.zero(1)


HALF_PI = math.pi / 2
