r"""Periodic quadrature, Fourier projection and closed-form kernel convolutions.

All periodic grids follow the anchor convention ``t_n = -pi + 2 pi n / N``,
so the first node sits at angle pi (the point ``[-r, 0]`` on a circle).

The closed forms collected here are the Fourier-domain tools used by the
radius-inflation scheme. For :math:`R > r > 0`:

* log kernel: :math:`\tfrac{1}{2\pi}\log(\tfrac{R^2+r^2}{2Rr} - \cos t)` has
  cosine coefficients :math:`\tfrac{1}{2\pi}\log\tfrac{R}{2r}` and
  :math:`-\tfrac{1}{\pi}\tfrac{(r/R)^n}{n}`;
* the derivative of the Poisson-type kernel convolves ``cos(n t)`` into
  :math:`\tfrac{n}{2Rr}(r/R)^n`;
* the Poisson-type kernel :math:`\tfrac{1}{2\pi}\tfrac{r-R\cos t}{R^2+r^2-2Rr\cos t}`
  convolves ``cos(n t)`` into :math:`-\tfrac{1}{2r}(r/R)^n` for ``n >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


class SamplingError(ValueError):
    """Raised when a grid is too coarse or a singular point is off-grid."""


def periodic_grid(n):
    """Equispaced angles ``-pi + 2 pi j / n`` for ``j = 0..n-1``."""
    return -np.pi + TWO_PI * np.arange(n) / n


# ---------------------------------------------------------------------------
# Trapezoidal rules
# ---------------------------------------------------------------------------


def periodic_trapezoid(samples, axis=-1):
    """Trapezoidal rule for a 2 pi-periodic integrand on an equispaced grid.

    Parameters
    ----------
    samples : array_like
        Values on ``periodic_grid(N)`` along ``axis``.

    Returns
    -------
    complex or ndarray
        ``(2 pi / N) * sum(samples)``.
    """
    samples = np.asarray(samples)
    n = samples.shape[axis]
    return TWO_PI / n * np.sum(samples, axis=axis)


def log_trapezoid_weights(t, m):
    """Modified trapezoid weights for ``int log|t - t_m| f(t) dt``.

    Parameters
    ----------
    t : array_like, shape (N,)
        Strictly increasing grid covering the integration interval.
    m : int
        Zero-based index of the singular node; must be interior.

    Returns
    -------
    ndarray
        Weights ``w`` such that ``sum(w * f)`` approximates the integral.

    Notes
    -----
    Off the singular node the log value is used directly, at the node it is
    replaced by ``(log D_m + log D_{m-1} - 4) / 2``. Each node carries the
    cell length ``D_i = t_{i+1} - t_i``, halved at both endpoints. The last
    node has no right cell, so it borrows ``D_{N-2}``.
    """
    t = np.asarray(t, dtype=float)
    n = t.size
    if not 0 < m < n - 1:
        raise SamplingError("singular node must be an interior grid point")
    delta = np.diff(t)
    if np.any(delta <= 0):
        raise SamplingError("grid must be strictly increasing")
    logs = np.empty(n)
    mask = np.arange(n) != m
    logs[mask] = np.log(np.abs(t[mask] - t[m]))
    logs[m] = 0.5 * (np.log(delta[m]) + np.log(delta[m - 1]) - 4.0)
    cell = np.append(delta, delta[-1])
    cell[0] *= 0.5
    cell[-1] *= 0.5
    return logs * cell


def log_trapezoid(f, t, t_star):
    """Integrate ``log|t - t_star| f(t)`` with the modified trapezoid rule.

    Parameters
    ----------
    f : array_like
        Samples of ``f`` on the grid ``t``.
    t : array_like
        Strictly increasing grid; ``t_star`` must be one of its interior nodes.
    t_star : float
        Location of the logarithmic singularity.

    Returns
    -------
    complex or float

    Examples
    --------
    >>> t = np.linspace(0, 1, 1001)
    >>> round(float(log_trapezoid(np.ones_like(t), t, 0.5)), 2)
    -1.69
    """
    t = np.asarray(t, dtype=float)
    hits = np.flatnonzero(np.isclose(t, t_star, rtol=0, atol=1e-12))
    if hits.size != 1:
        raise SamplingError("t_star must coincide with a grid node")
    w = log_trapezoid_weights(t, int(hits[0]))
    return np.sum(w * np.asarray(f))


# ---------------------------------------------------------------------------
# Fourier series on the anchored grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierSeries:
    """Cosine/sine series ``sum_n p_n cos(n t) + q_n sin(n t)``.

    ``p`` and ``q`` have length ``M + 1``; ``q[0]`` is always zero.
    """

    p: np.ndarray
    q: np.ndarray

    @property
    def modes(self):
        return self.p.size - 1


def exponential_coefficients(samples, axis=-1):
    """Coefficients ``c_n = (1/N) sum f(t_j) exp(-i n t_j)`` in FFT order."""
    samples = np.asarray(samples)
    n = samples.shape[axis]
    c = np.fft.fft(samples, axis=axis) / n
    sign = (-1.0) ** np.arange(n)
    shape = [1] * c.ndim
    shape[axis] = n
    return c * sign.reshape(shape)


def fourier_project(samples, modes):
    """Project grid samples onto a :class:`FourierSeries` of ``modes`` modes.

    Parameters
    ----------
    samples : array_like, shape (N,)
        Values on ``periodic_grid(N)``.
    modes : int
        Highest retained mode ``M``; requires ``N >= 2 M + 2``.
    """
    samples = np.asarray(samples, dtype=complex)
    n = samples.size
    if n < 2 * modes + 2:
        raise SamplingError(f"need N >= 2M+2 samples, got N={n}, M={modes}")
    c = exponential_coefficients(samples)
    idx = np.arange(1, modes + 1)
    p = np.empty(modes + 1, dtype=complex)
    q = np.zeros(modes + 1, dtype=complex)
    p[0] = c[0]
    p[1:] = c[idx] + c[-idx]
    q[1:] = 1j * (c[idx] - c[-idx])
    return FourierSeries(p, q)


def fourier_synth(series, t):
    """Evaluate a :class:`FourierSeries` at angles ``t``."""
    t = np.asarray(t, dtype=float)
    n = np.arange(series.p.size)
    arg = t[..., None] * n
    return np.cos(arg) @ series.p + np.sin(arg) @ series.q


def cosine_to_exponential(c, n):
    """Map cosine coefficients of an even kernel to FFT-ordered exponentials.

    Parameters
    ----------
    c : array_like
        Cosine coefficients ``c_0..c_K``; missing modes are treated as zero.
    n : int
        Grid size.
    """
    c = np.asarray(c)
    out = np.zeros(n, dtype=complex)
    freq = np.abs(np.fft.fftfreq(n, 1.0 / n)).astype(int)
    keep = freq < c.size
    out[keep] = np.where(freq[keep] == 0, c[0], 0.5 * c[freq[keep]])
    return out


def periodic_convolution(f, kernel_hat, axis=-1):
    """Evaluate ``int f(t) L(t_a - t) dt`` at every grid angle ``t_a``.

    Parameters
    ----------
    f : array_like
        Samples on the anchored grid along ``axis``.
    kernel_hat : array_like, shape (N,)
        Exact exponential Fourier coefficients of ``L`` in FFT order.

    Notes
    -----
    The anchor phase ``(-1)^n`` cancels between analysis and synthesis, so
    plain FFTs apply. With exact kernel coefficients this is the spectral
    product-integration rule for kernels that are singular or nearly so.
    """
    f = np.asarray(f)
    shape = [1] * f.ndim
    shape[axis] = f.shape[axis]
    kh = np.asarray(kernel_hat).reshape(shape)
    return TWO_PI * np.fft.ifft(np.fft.fft(f, axis=axis) * kh, axis=axis)


def kernel_coefficients(func, n, width=None, min_oversample=4, max_points=1 << 20):
    """Exponential Fourier coefficients of a periodic kernel by oversampling.

    Parameters
    ----------
    func : callable
        Vectorized 2 pi-periodic function of the angle difference.
    n : int
        Number of coefficients wanted (FFT order of a size-``n`` grid).
    width : float, optional
        Angular width of the kernel's near-singular feature. The fine grid
        spacing is kept below ``width / 6`` so the fine trapezoid rule is
        exponentially accurate.
    """
    m = n * min_oversample
    if width is not None and width > 0:
        while TWO_PI / m > width / 6.0 and m < max_points:
            m *= 2
    t = periodic_grid(m)
    c = exponential_coefficients(func(t))
    idx = np.fft.fftfreq(n, 1.0 / n).astype(int)
    return c[idx % m]


# ---------------------------------------------------------------------------
# Closed-form kernel identities
# ---------------------------------------------------------------------------


def _check_radii(R, r):
    if not (R > r > 0):
        raise ValueError(f"require R > r > 0, got R={R}, r={r}")


def log_kernel_fourier(R, r, n_max):
    r"""Cosine coefficients of :math:`\tfrac{1}{2\pi}\log(\tfrac{R^2+r^2}{2Rr}-\cos t)`.

    Returns
    -------
    ndarray, shape (n_max + 1,)
        ``c_0 = log(R/(2r))/(2 pi)`` and ``c_n = -(r/R)^n / (pi n)``.
    """
    _check_radii(R, r)
    n = np.arange(1, n_max + 1)
    c = np.empty(n_max + 1)
    c[0] = np.log(R / (2.0 * r)) / TWO_PI
    c[1:] = -((r / R) ** n) / (np.pi * n)
    return c


def log_one_minus_cos_fourier(n_max):
    r"""Cosine coefficients of :math:`\tfrac{1}{2\pi}\log(1-\cos t)`.

    The ``R = r`` limit of :func:`log_kernel_fourier`: ``c_0 = -log 2/(2 pi)``
    and ``c_n = -1/(pi n)``.
    """
    n = np.arange(1, n_max + 1)
    return np.concatenate(([-np.log(2.0) / TWO_PI], -1.0 / (np.pi * n)))


def poisson_derivative_convolution(R, r, n):
    r"""Closed form of the derivative-kernel convolution with ``cos(n t)``.

    .. math::
        \int_{-\pi}^{\pi} \frac{-1}{2\pi}
        \frac{2Rr-(R^2+r^2)\cos(t_x-t)}{(R^2+r^2-2Rr\cos(t_x-t))^2}
        \cos(n(t_z-t))\,dt = \frac{n}{2Rr}\Big(\frac{r}{R}\Big)^n\cos(n(t_z-t_x))

    Returns the coefficient ``n (r/R)^n / (2 R r)``.
    """
    _check_radii(R, r)
    n = np.asarray(n)
    return n / (2.0 * R * r) * (r / R) ** n


def poisson_convolution(R, r, n):
    r"""Closed form of the Poisson-type kernel convolution with ``cos(n t)``.

    .. math::
        \int_{-\pi}^{\pi}\frac{1}{2\pi}\frac{r-R\cos(t_x-t)}{R^2+r^2-2Rr\cos(t_x-t)}
        \cos(n(t_z-t))\,dt = -\frac{1}{2r}\Big(\frac{r}{R}\Big)^n\cos(n(t_x-t_z))

    for ``n >= 1`` and zero for ``n = 0``.
    """
    _check_radii(R, r)
    n = np.asarray(n)
    return np.where(n == 0, 0.0, -0.5 / r * (r / R) ** n)


def poisson_kernel(R, r, tau):
    """The Poisson-type kernel ``(r - R cos tau) / (2 pi (R^2 + r^2 - 2 R r cos tau))``."""
    return (r - R * np.cos(tau)) / (TWO_PI * (R * R + r * r - 2 * R * r * np.cos(tau)))


def poisson_derivative_kernel(R, r, tau):
    """The kernel ``-(2Rr - (R^2+r^2) cos tau) / (2 pi (R^2+r^2-2Rr cos tau)^2)``."""
    den = R * R + r * r - 2 * R * r * np.cos(tau)
    return -(2 * R * r - (R * R + r * r) * np.cos(tau)) / (TWO_PI * den * den)


def convolution_by_quadrature(kernel, R, r, n, tau, n_quad=1024):
    """Direct trapezoid value of ``int kernel(R, r, t_x - t) cos(n (t_z - t)) dt``.

    ``tau = t_x - t_z``; the oracle behind both convolution identities.
    """
    t = periodic_grid(n_quad)
    t_z = 0.0
    t_x = tau
    return periodic_trapezoid(kernel(R, r, t_x - t) * np.cos(n * (t_z - t)))


def double_convolution_closed_form(R, r, tau):
    r"""Closed form of the log/derivative-kernel double convolution.

    Returns :math:`\tfrac{r^2}{2\pi R}\tfrac{R^2\cos\tau - r^2}{R^4+r^4-2R^2r^2\cos\tau}`.
    """
    _check_radii(R, r)
    c = np.cos(tau)
    return r * r / (TWO_PI * R) * (R * R * c - r * r) / (R ** 4 + r ** 4 - 2 * R * R * r * r * c)


def double_convolution_quadrature(R, r, tau, n_quad=1024):
    """Trapezoid evaluation of the integral whose closed form is :func:`double_convolution_closed_form`.

    Computes ``-r * int K'(t - tau) * log((R^2+r^2)/(2Rr) - cos t) / (2 pi) dt``
    with ``K'`` the derivative kernel.
    """
    _check_radii(R, r)
    t = periodic_grid(n_quad)
    c = (R * R + r * r) / (2 * R * r)
    integrand = poisson_derivative_kernel(R, r, t - tau) * np.log(c - np.cos(t)) / TWO_PI
    return -r * periodic_trapezoid(integrand)
