import math

import pytest

from adhesive_beam.basis import build_basis
from adhesive_beam.beam import BeamParams


@pytest.fixture
def unit_params():
    return BeamParams(1.0, 1.0, 1.0)


@pytest.fixture
def small_basis():
    return build_basis(16, 16, 1.0)


@pytest.fixture
def pi_params():
    return BeamParams(1.0, 1.0, math.pi)
