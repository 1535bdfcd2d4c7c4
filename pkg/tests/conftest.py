import numpy as np
import pytest

from carsep.car_algebra import FermionAlgebra, Partition


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def p11():
    return Partition((1,), (2,))


@pytest.fixture
def p21():
    return Partition((1, 2), (3,))


@pytest.fixture
def alg3():
    return FermionAlgebra((1, 2, 3))
