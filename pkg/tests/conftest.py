import warnings

import pytest
from hypothesis import HealthCheck, settings

from bubbly.errors import NecessityViolated
from bubbly.models.leverage import LeverageParams
from bubbly.models.primitives import CobbDouglas, LogUtility
from bubbly.models.samuelson import SamuelsonParams
from bubbly.models.tirole import TiroleParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def sam_base():
    """beta = 0.5, a = 3, b = 1, G = 1.2: bubbly price 1/3, R_f = 0.8."""
    return SamuelsonParams(a=3.0, b=1.0, beta=0.5, G=1.2)


@pytest.fixture
def sam_div():
    return SamuelsonParams(a=3.0, b=1.0, beta=0.5, G=1.2, G_d=1.0, D0=0.01)


@pytest.fixture
def tirole_cd():
    """Full depreciation, alpha = 1/4: a bubbly steady state exists."""
    return TiroleParams(CobbDouglas(A=1.0, alpha=0.25, delta=1.0), LogUtility(beta=0.9),
                        G=1.05, G_d=0.8, D0=0.01)


@pytest.fixture
def lev_params():
    return LeverageParams(beta=0.96, pi=0.1, lam=5.0, delta=0.1, G=1.02,
                          production=CobbDouglas(A=1.0, alpha=1.0 / 3.0, delta=1.0))


@pytest.fixture(autouse=True)
def _quiet_necessity():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NecessityViolated)
        yield
