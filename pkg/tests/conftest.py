import numpy as np
import pytest

from quasifree import LatticeShape, ModelParams, catalog


@pytest.fixture
def p_model_64():
    return catalog(ModelParams("p-model", {"p": 2.0}, LatticeShape((64,), 2)))


@pytest.fixture
def twisted_critical_64():
    return catalog(ModelParams("twisted-chain", {"alpha": np.pi / 2}, LatticeShape((64,), 1)))


def make_twisted(n_sites: int, alpha: float):
    return catalog(ModelParams("twisted-chain", {"alpha": alpha}, LatticeShape((n_sites,), 1)))


def make_p_model(n_sites: int, p: float):
    return catalog(ModelParams("p-model", {"p": p}, LatticeShape((n_sites,), 2)))
