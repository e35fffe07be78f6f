import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rydssh.chain import build_chain, default_couplings
from rydssh.config import default_config
from rydssh.errors import DegeneracyWarning

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def nh(cfg):
    return default_couplings(cfg, +1)


@pytest.fixture(scope="session")
def nh_minus(cfg):
    return default_couplings(cfg, -1)


@pytest.fixture(scope="session")
def clean_chain(cfg, nh):
    return build_chain(nh, cfg.n_cells, "OBC")


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        yield


def random_density(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)
