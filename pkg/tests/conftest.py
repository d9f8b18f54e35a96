import numpy as np
import pytest
import scipy.special as sp
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def exact_disk_neumann(k, a, z, x, nmax=80):
    """Neumann function outside a disk of radius ``a`` at the origin (separation of variables)."""
    z = np.asarray(z, float)
    x = np.asarray(x, float)
    rz, tz = np.hypot(*z), np.arctan2(z[1], z[0])
    rx, tx = np.hypot(*x), np.arctan2(x[1], x[0])
    g = -0.25j * sp.hankel1(0, k * np.hypot(*(z - x)))
    n = np.arange(-nmax, nmax + 1)
    c = 0.25j * sp.jvp(n, k * a) / sp.h1vp(n, k * a)
    return g + np.sum(c * sp.hankel1(n, k * rz) * sp.hankel1(n, k * rx) * np.exp(1j * n * (tz - tx)))


@pytest.fixture(scope="session")
def exact_disk():
    return exact_disk_neumann
