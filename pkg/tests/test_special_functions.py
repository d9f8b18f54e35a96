import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helmneumann.special_functions import (
    EULER_GAMMA,
    DomainError,
    bessel_jy01,
    gamma_derivatives,
    gamma_k,
    gamma_k_grad,
    gamma_k_hessian,
    hankel1_0,
    hankel1_1,
)

# mpmath at 30 digits
FROZEN = {
    1.0: (0.7651976865579666 + 0.08825696421567696j, 0.4400505857449335 - 0.7812128213002887j),
    1e-8: (1 - 11.80077387717953j, 5e-09 - 63661977.236758195j),
    0.5: (0.9384698072408129 - 0.44451873350670656j, 0.2422684576748739 - 1.471472392670243j),
    5.0: (-0.1775967713143383 - 0.30851762524903376j, -0.32757913759146523 + 0.14786314339122683j),
    15.9: (-0.16497049948567058 + 0.11315496565176712j, 0.10802789006306508 + 0.16860643140069134j),
    16.1: (-0.1830236924653104 + 0.07762075870138267j, 0.07197941862245026 + 0.18551971729151592j),
    100.0: (0.019985850304223122 - 0.07724431336508315j, -0.07714535201411216 - 0.020372312002759792j),
    700.0: (-0.006288272465068767 + 0.02949430818089382j, 0.029489824084030333 + 0.00630934142145256j),
}


@pytest.mark.parametrize("z", sorted(FROZEN))
def test_hankel_frozen_values(z):
    h0, h1 = FROZEN[z]
    assert abs(hankel1_0(z) - h0) <= 1e-12 * abs(h0)
    assert abs(hankel1_1(z) - h1) <= 1e-12 * abs(h1)


def test_hankel_unit_argument():
    assert abs(hankel1_0(1.0) - (0.765197686557967 + 0.088256964215677j)) < 1e-14
    assert abs(hankel1_1(1.0) - (0.440050585744934 - 0.781212821300289j)) < 1e-14


def test_small_argument_limit():
    z = 1e-8
    h = hankel1_0(z)
    assert abs(h.real - 1.0) <= 1e-10
    expected = 2 / np.pi * (np.log(z / 2) + EULER_GAMMA)
    assert abs(h.imag - expected) <= 1e-10 * abs(expected)


def test_large_argument_asymptote():
    z = 100.0
    approx = np.sqrt(2 / (np.pi * z)) * np.exp(1j * (z - np.pi / 4))
    # the next asymptotic term is of relative size 1/(8z)
    assert abs(hankel1_0(z) - approx) / abs(approx) < 1.3 / (8 * z)


@given(st.floats(min_value=1e-3, max_value=700.0))
def test_hankel_against_mpmath(z):
    mp.mp.dps = 30
    for order, fn in ((0, hankel1_0), (1, hankel1_1)):
        ref = complex(mp.hankel1(order, z))
        assert abs(fn(z) - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("z", np.logspace(-3, 2, 41))
def test_wronskian(z):
    j0, j1, y0, y1 = bessel_jy01(z)
    assert abs(j0 * y1 - j1 * y0 + 2 / (np.pi * z)) <= 1e-12 * 2 / (np.pi * z)


def test_derivative_recurrence():
    h = 1e-5
    fd = (hankel1_0(2 + h) - hankel1_0(2 - h)) / (2 * h)
    assert abs(fd + hankel1_1(2.0)) < 1e-6


@pytest.mark.parametrize("z", [0.0, -1.0, np.inf, np.nan])
def test_hankel_domain_error(z):
    with pytest.raises(DomainError):
        hankel1_0(z)
    with pytest.raises(DomainError):
        hankel1_1(z)


def test_gamma_k_value_and_symmetry():
    z, x = np.array([0.3, -0.2]), np.array([1.3, -0.2])
    assert abs(gamma_k(1.0, z, x) - (0.022064241053919 - 0.191299421639492j)) < 1e-14
    assert gamma_k(1.0, z, x) == gamma_k(1.0, x, z)


def test_gamma_k_coincident():
    with pytest.raises(DomainError):
        gamma_k(1.0, [1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        gamma_k_grad(1.0, [1.0, 2.0], [1.0, 2.0])


def _fd_laplacian(k, z, x, h):
    e = np.eye(2)
    lap = sum(gamma_k(k, z, x + h * e[a]) + gamma_k(k, z, x - h * e[a]) for a in range(2))
    return (lap - 4 * gamma_k(k, z, x)) / h ** 2


def test_helmholtz_residual():
    z, x = np.zeros(2), np.array([2.0, 0.0])
    res = _fd_laplacian(1.0, z, x, 1e-4) + gamma_k(1.0, z, x)
    assert abs(res) <= 1e-5


@given(st.floats(0.2, 5.0), st.floats(0.3, 4.0), st.floats(0, 2 * np.pi))
def test_helmholtz_residual_random(k, sep, ang):
    z = np.array([0.1, 0.2])
    x = z + sep * np.array([np.cos(ang), np.sin(ang)])
    h = 1e-3 * sep
    res = _fd_laplacian(k, z, x, h) + k * k * gamma_k(k, z, x)
    # central differences carry an h^2 / 12 fourth-derivative error
    assert abs(res) <= 1e-5 + 1e-2 * h * h * k ** 4 * max(1.0, 1.0 / sep ** 4)


def test_gradient_antisymmetry_and_fd():
    z, x = np.array([0.2, 0.1]), np.array([1.1, 1.3])
    x = z + 1.5 * (x - z) / np.hypot(*(x - z))
    gx = gamma_k_grad(1.0, z, x)
    gz = gamma_derivatives(1.0, z - x, 1)[1]
    assert np.allclose(gx, -gz, rtol=0, atol=0)
    h = 1e-5
    e = np.eye(2)
    fd = np.array([(gamma_k(1.0, z, x + h * e[a]) - gamma_k(1.0, z, x - h * e[a])) / (2 * h)
                   for a in range(2)])
    assert np.max(np.abs(fd - gx)) <= 1e-7 * np.max(np.abs(gx))


def test_hessian_trace():
    z = np.zeros(2)
    x = 0.7 * np.array([np.cos(0.4), np.sin(0.4)])
    H = gamma_k_hessian(2.0, z, x)
    g = gamma_k(2.0, z, x)
    assert abs(np.trace(H) + 4.0 * g) <= 1e-8 * abs(4.0 * g)
    assert np.allclose(H, H.T)


@given(st.floats(0.3, 3.0), st.floats(0.2, 3.0), st.floats(0, 2 * np.pi))
def test_third_derivative_fd(k, sep, ang):
    d = sep * np.array([np.cos(ang), np.sin(ang)])
    h = 1e-4 * sep
    T = gamma_derivatives(k, d, 3)[3]
    e = np.eye(2)
    for a in range(2):
        fd = (gamma_derivatives(k, d + h * e[a], 2)[2] - gamma_derivatives(k, d - h * e[a], 2)[2]) / (2 * h)
        assert np.max(np.abs(fd - T[..., a])) <= 1e-6 * np.max(np.abs(T)) + 1e-9


def test_outputs_finite_on_grid():
    z = np.logspace(-6, np.log10(700), 500)
    for arr in bessel_jy01(z):
        assert np.all(np.isfinite(arr))
