import numpy as np
import pytest

from onebit_mimo import blmmse, pilots, theorem1
from onebit_mimo.channel import scenario_covariances
from onebit_mimo.config import SystemConfig


@pytest.fixture(scope="session")
def small_two_ue():
    """M=4, K=2, tau=5, rho=1: the smallest oracle-friendly scenario."""
    cfg = SystemConfig(M=4, K=2, tau=5, rho=1.0)
    cov = scenario_covariances(cfg, "two_ue")
    pm = pilots.pilot_matrix(5, 2)
    return cov, pm, 1.0


@pytest.fixture(scope="session")
def small_ctx(small_two_ue):
    cov, pm, rho = small_two_ue
    return theorem1.make_context(cov, pm, rho)


@pytest.fixture(scope="session")
def medium_ctx():
    """M=8, K=2, tau=5, rho=1: used by expectation-level checks."""
    cfg = SystemConfig(M=8, K=2, tau=5, rho=1.0)
    cov = scenario_covariances(cfg, "two_ue")
    pm = pilots.pilot_matrix(5, 2)
    return theorem1.make_context(cov, pm, 1.0)


@pytest.fixture(scope="session")
def desk_ctx():
    """M=32, K=2, tau=31, rho=1: the desk-scale scenario of the figures."""
    cfg = SystemConfig(M=32, K=2, tau=31, rho=1.0)
    cov = scenario_covariances(cfg, "two_ue")
    pm = pilots.pilot_matrix(31, 2)
    return theorem1.make_context(cov, pm, 1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
