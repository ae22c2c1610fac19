import numpy as np
import pytest

import cellfade as cf
from cellfade.electrochem import pristine_inventory


@pytest.fixture(scope="session")
def cellpair():
    """(CellParameters, DegradationParameters) for the built-in demo cell."""
    return cf.default_cell()


@pytest.fixture(scope="session")
def params(cellpair):
    return cellpair[0]


@pytest.fixture(scope="session")
def degp(cellpair):
    return cellpair[1]


@pytest.fixture(scope="session")
def n_li0(params):
    return pristine_inventory(params)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
