import numpy as np
import pytest

from msf.deformation import deform
from msf.master import catalog_lookup, superpotential


@pytest.fixture(scope="session")
def ex1():
    return catalog_lookup("oscillator-like", alpha=0.0, beta=2.0, m=1)


@pytest.fixture(scope="session")
def ex2():
    return catalog_lookup("radial-oscillator-like", alpha=0.5, beta=4.0, m=1)


@pytest.fixture(scope="session")
def W1(ex1):
    return superpotential(ex1).W


@pytest.fixture(scope="session")
def W2(ex2):
    return superpotential(ex2).W


@pytest.fixture(scope="session")
def prof1(ex1):
    return deform(ex1, 2.0)


@pytest.fixture(scope="session")
def prof2(ex2):
    return deform(ex2, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
