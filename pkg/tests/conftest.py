import pytest

from pmbus_sim import Platform
from pmbus_sim.crypto import CrtRsaKey


@pytest.fixture
def x11():
    return Platform.from_profile("x11ssl-cf", seed=0)


@pytest.fixture
def x12():
    return Platform.from_profile("x12dpi-nt6", seed=0)


@pytest.fixture
def asrock():
    return Platform.from_profile("e3c246d4i-2t", seed=0)


@pytest.fixture(scope="session")
def small_key():
    return CrtRsaKey.from_primes(11, 19, e=7)
