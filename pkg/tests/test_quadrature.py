import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from helmneumann.quadrature import (
    TWO_PI,
    SamplingError,
    convolution_by_quadrature,
    double_convolution_closed_form,
    double_convolution_quadrature,
    fourier_project,
    fourier_synth,
    log_kernel_fourier,
    log_trapezoid,
    log_trapezoid_weights,
    periodic_grid,
    periodic_trapezoid,
    poisson_convolution,
    poisson_derivative_convolution,
    poisson_derivative_kernel,
    poisson_kernel,
)

# value of int_0^1 log|t - 1/2| t dt from scipy.integrate.quad with the breakpoint
LOG_T_INTEGRAL = -0.8465735902799727


def test_periodic_trapezoid_examples():
    t = periodic_grid(64)
    assert abs(periodic_trapezoid(np.cos(3 * t))) < 1e-14
    assert abs(periodic_trapezoid(np.ones(64)) - TWO_PI) < 1e-14
    assert abs(periodic_trapezoid(1 / (1.25 - np.cos(t))) - 8 * np.pi / 3) < 1e-12


def test_grid_anchor():
    t = periodic_grid(8)
    assert t[0] == -np.pi and np.allclose(np.diff(t), TWO_PI / 8)


def test_log_trapezoid_examples():
    t = np.linspace(0, 1, 1001)
    assert abs(log_trapezoid(np.ones_like(t), t, 0.5) - (np.log(0.5) - 1)) < 5e-3
    assert log_trapezoid(np.zeros_like(t), t, 0.5) == 0
    assert abs(log_trapezoid(t, t, 0.5) - LOG_T_INTEGRAL) < 5e-3


def test_log_t_oracle():
    val = quad(lambda s: np.log(abs(s - 0.5)) * s, 0, 1, points=[0.5], limit=200)[0]
    assert abs(val - LOG_T_INTEGRAL) < 1e-10
    assert abs(LOG_T_INTEGRAL - 0.5 * (np.log(0.5) - 1)) < 1e-12


def test_log_weights_structure():
    t = np.linspace(0, 1, 11)
    w = log_trapezoid_weights(t, 5)
    d = 0.1
    assert np.isclose(w[5], 0.5 * (2 * np.log(d) - 4) * d)
    assert np.isclose(w[0], np.log(0.5) * d / 2)
    assert np.isclose(w[-1], np.log(0.5) * d / 2)


def test_log_trapezoid_errors():
    t = np.linspace(0, 1, 11)
    with pytest.raises(SamplingError):
        log_trapezoid(np.ones(11), t, 0.55)
    with pytest.raises(SamplingError):
        log_trapezoid_weights(t, 0)


def test_log_rule_order():
    d, e = [], []
    for n in (1001, 2001, 4001, 8001):
        t = np.linspace(0, 1, n)
        e.append(abs(log_trapezoid(np.ones(n), t, 0.5) - (np.log(0.5) - 1)))
        d.append(1 / (n - 1))
    d, e = np.array(d), np.array(e)
    slope = np.polyfit(np.log(d), np.log(e / np.abs(np.log(d))), 1)[0]
    assert 0.85 <= slope <= 1.15


def test_fourier_project_examples():
    t = periodic_grid(32)
    s = fourier_project(2 + np.cos(t), 8)
    assert abs(s.p[0] - 2) < 1e-12 and abs(s.p[1] - 1) < 1e-12
    assert np.max(np.abs(s.p[2:])) < 1e-12 and np.max(np.abs(s.q)) < 1e-12
    s = fourier_project(np.sin(2 * t), 8)
    assert abs(s.q[2] - 1) < 1e-12
    assert np.max(np.abs(np.delete(s.q, 2))) < 1e-12 and np.max(np.abs(s.p)) < 1e-12
    with pytest.raises(SamplingError):
        fourier_project(np.ones(16), 8)


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=11, max_size=11))
def test_fourier_round_trip(coef):
    t = periodic_grid(64)
    p, q = np.array(coef[:6]), np.concatenate(([0], coef[6:]))
    f = sum(p[n] * np.cos(n * t) + q[n] * np.sin(n * t) for n in range(6))
    s = fourier_project(f, 31)
    assert np.max(np.abs(fourier_synth(s, t) - f)) <= 1e-11 * max(1.0, np.max(np.abs(f)))


def test_log_kernel_fourier():
    c = log_kernel_fourier(2.0, 1.0, 200)
    assert abs(c[1] + 1 / TWO_PI) < 1e-15 and c[0] == 0.0
    t = np.pi / 3
    direct = np.log((4 + 1) / 4 - np.cos(t)) / TWO_PI
    series = c[0] + np.sum(c[1:] * np.cos(np.arange(1, 201) * t))
    assert abs(series - direct) < 1e-12
    with pytest.raises(ValueError):
        log_kernel_fourier(1.0, 1.0, 3)


def test_poisson_derivative_convolution_examples():
    assert poisson_derivative_convolution(2.0, 1.0, 0) == 0
    assert poisson_derivative_convolution(2.0, 1.0, 2) == pytest.approx(1 / 8, abs=1e-15)
    q = convolution_by_quadrature(poisson_derivative_kernel, 2.0, 1.0, 2, 0.0, n_quad=512)
    assert abs(q - 1 / 8) < 1e-10
    for n in range(1, 6):
        ratio = poisson_derivative_convolution(2.0, 1.0, n + 1) / poisson_derivative_convolution(2.0, 1.0, n)
        assert ratio == pytest.approx((n + 1) / n * 0.5, rel=1e-14)


def test_poisson_convolution_examples():
    assert poisson_convolution(2.0, 1.0, 0) == 0
    # the quadrature oracle gives -1/(2r) (r/R)^n
    q = convolution_by_quadrature(poisson_kernel, 2.0, 1.0, 1, 0.0, n_quad=512)
    assert abs(q - (-0.25)) < 1e-10
    assert abs(poisson_convolution(2.0, 1.0, 1) - q) < 1e-10
    assert np.all(poisson_convolution(2.0, 1.0, np.arange(1, 9)) < 0)


@given(st.floats(0.05, 0.9), st.integers(0, 8), st.floats(-np.pi, np.pi))
def test_convolution_identities_property(rho, n, tau):
    R = 1.3
    r = rho * R
    q = convolution_by_quadrature(poisson_derivative_kernel, R, r, n, tau)
    assert abs(q - poisson_derivative_convolution(R, r, n) * np.cos(n * tau)) < 1e-8
    q = convolution_by_quadrature(poisson_kernel, R, r, n, tau)
    assert abs(q - poisson_convolution(R, r, n) * np.cos(n * tau)) < 1e-8


def test_double_convolution_examples():
    assert double_convolution_closed_form(2.0, 1.0, np.pi) == pytest.approx(-1 / (20 * np.pi), rel=1e-14)
    tau = np.arccos(1 / 4)
    assert abs(double_convolution_closed_form(2.0, 1.0, tau)) < 1e-16
    for rho in (0.2, 0.5, 0.8):
        for tau in np.linspace(-np.pi, np.pi, 8, endpoint=False):
            assert abs(double_convolution_quadrature(1.0, rho, tau)
                       - double_convolution_closed_form(1.0, rho, tau)) <= 1e-8
