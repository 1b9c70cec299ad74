import numpy as np
import pytest

from elastic_herglotz.core import make_params


@pytest.fixture(scope="session")
def params12():
    """Material with kp = 1, ks = 2 (lam = 2, mu = 1, rho = 1, omega = 2)."""
    p = make_params(2.0, 1.0, 1.0, 2.0)
    assert abs(p.kp - 1.0) < 1e-15 and abs(p.ks - 2.0) < 1e-15
    return p


@pytest.fixture(scope="session")
def params115():
    """Material with kp = 1, ks = 1.5."""
    p = make_params(0.25, 1.0, 1.0, 1.5)
    assert abs(p.kp - 1.0) < 1e-15 and abs(p.ks - 1.5) < 1e-15
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
