import numpy as np
import pytest

from conceptscope.datagen import gen_hexagon, gen_vitals
from conceptscope.model import ConceptParams, Dataset, LabelParams, PriorSpec


@pytest.fixture(scope="session")
def hexagon():
    return gen_hexagon()


@pytest.fixture(scope="session")
def vitals():
    return gen_vitals()


@pytest.fixture
def tiny_data():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(8, 2))
    y = np.array([0, 1, 0, 1, 1, 0, 1, 0])
    return Dataset(features=X, labels=y)


@pytest.fixture
def tiny_params():
    rng = np.random.default_rng(3)
    theta = ConceptParams(rng.normal(size=(2, 2)), rng.normal(size=2))
    phi = LabelParams(rng.normal(size=2), float(rng.normal()))
    return theta, phi


@pytest.fixture
def prior():
    return PriorSpec()
