"""Shared small-lattice fixtures.  Unit tests run at n = 8 or 12 so the whole
suite stays fast; the acceptance gate in test_acceptance.py uses the full
n in {16, 24, 32} ladder."""

import pytest

from freeparticle.grid import build_grid, gaussian_packet
from freeparticle.operators import sample_states
from freeparticle.triplets import TripletClass, make_triplet


@pytest.fixture(scope="session")
def grid8():
    return build_grid(8, 6.0, 1.0)


@pytest.fixture(scope="session")
def grid8_pm():
    return build_grid(8, 6.0, 1.0, blocks=2)


@pytest.fixture(scope="session")
def grid8_massless_pm():
    return build_grid(8, 6.0, 0.0, blocks=2)


@pytest.fixture(scope="session")
def grid12():
    return build_grid(12, 6.0, 1.0)


@pytest.fixture(scope="session")
def triplet_plus(grid8):
    return make_triplet(TripletClass.MASSIVE_PLUS, grid8)


@pytest.fixture(scope="session")
def triplet_pm1(grid8_pm):
    return make_triplet(TripletClass.MASSIVE_PM_1, grid8_pm)


@pytest.fixture(scope="session")
def wave_samples8(grid8):
    return sample_states(grid8, kind="wave")


@pytest.fixture(scope="session")
def packet8(grid8):
    return gaussian_packet(grid8, (1.0, 0.0, 0.0), 1.2, label="probe")
