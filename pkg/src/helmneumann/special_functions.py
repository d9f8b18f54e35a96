r"""Hankel functions and the Helmholtz fundamental solution.

The outgoing fundamental solution of :math:`(\Delta + k^2)\Gamma = \delta` in
the plane is

.. math::
    \Gamma^k(z, x) = -\frac{i}{4} H_0^{(1)}(k |z - x|).

:math:`J_0, J_1, Y_0, Y_1` are evaluated without external libraries. Small
arguments use the ascending series summed in ``np.longdouble`` (80-bit on
x86); large arguments use the Hankel asymptotic expansion. The crossover sits
at ``SERIES_LIMIT``. Below it the series loses at most ``exp(z)/z``-sized
digits to cancellation, which the extended precision absorbs; above it the
smallest asymptotic term is about ``exp(-2 z)``.
"""

from __future__ import annotations

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243
SERIES_LIMIT = 16.0
_CHUNK = 1 << 17
_LD = np.longdouble
_GAMMA_LD = _LD("0.57721566490153286060651209008240243")
_PI_LD = _LD("3.14159265358979323846264338327950288")


class DomainError(ValueError):
    """Raised when an argument lies outside the supported domain."""


# ---------------------------------------------------------------------------
# Core evaluation on positive reals
# ---------------------------------------------------------------------------


def _series(z):
    """Ascending series for J0, J1, Y0, Y1 on a longdouble array ``z``."""
    q = (z * z) / 4
    half = z / 2
    j0 = np.ones_like(z)
    j1 = np.ones_like(z)
    y0s = np.zeros_like(z)
    # y1s accumulates (-1)^k (psi(k+1) + psi(k+2)) q^k / (k!(k+1)!);
    # the k = 0 term is psi(1) + psi(2) = 1 - 2 gamma
    y1s = np.full_like(z, _LD(1) - 2 * _GAMMA_LD)
    t0 = np.ones_like(z)  # q^k / (k!)^2 with sign
    t1 = np.ones_like(z)  # q^k / (k!(k+1)!) with sign
    hk = _LD(0)  # harmonic number H_k
    k = 0
    while True:
        k += 1
        t0 = -t0 * q / (k * k)
        t1 = -t1 * q / (k * (k + 1))
        hk = hk + _LD(1) / k
        j0 += t0
        j1 += t1
        y0s -= t0 * hk
        # psi(k+1) + psi(k+2) = H_k + H_{k+1} - 2 gamma
        y1s += t1 * (2 * hk + _LD(1) / (k + 1) - 2 * _GAMMA_LD)
        mag = float(np.max(np.abs(t0))) * (float(hk) + 2.0)
        if mag < 1e-22:
            break
    j1 = half * j1
    lg = np.log(half)
    y0 = (2 / _PI_LD) * ((lg + _GAMMA_LD) * j0 + y0s)
    y1 = -2 / (_PI_LD * z) + (2 / _PI_LD) * lg * j1 - (half / _PI_LD) * y1s
    return j0, j1, y0, y1


def _asymptotic(z):
    """Hankel asymptotic expansion for J0, J1, Y0, Y1, valid for large ``z``."""
    out = []
    for nu in (0, 1):
        mu = 4 * nu * nu
        p = np.ones_like(z)
        qs = np.zeros_like(z)
        term = np.ones_like(z)
        prev = np.full_like(z, np.inf)
        active = np.ones(z.shape, dtype=bool)
        for m in range(1, 80):
            term = term * (mu - (2 * m - 1) ** 2) / (m * 8 * z)
            mag = np.abs(term)
            # stop each entry at the smallest term (optimal truncation)
            active &= mag < prev
            prev = np.where(active, mag, prev)
            contrib = np.where(active, term, 0)
            if m % 4 == 1:
                qs += contrib
            elif m % 4 == 2:
                p -= contrib
            elif m % 4 == 3:
                qs -= contrib
            else:
                p += contrib
            if not active.any() or float(np.max(np.where(active, mag, 0))) < 1e-21:
                break
        chi = z - (2 * nu + 1) * _PI_LD / 4
        amp = np.sqrt(2 / (_PI_LD * z))
        c, s = np.cos(chi), np.sin(chi)
        out.append(amp * (p * c - qs * s))
        out.append(amp * (p * s + qs * c))
    j0, y0, j1, y1 = out
    return j0, j1, y0, y1


def bessel_jy01(z):
    """Evaluate J0, J1, Y0, Y1 at positive real arguments.

    Parameters
    ----------
    z : array_like
        Positive real arguments.

    Returns
    -------
    j0, j1, y0, y1 : ndarray
        Float64 arrays with the shape of ``z``.

    Raises
    ------
    DomainError
        If any argument is not strictly positive and finite.
    """
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise DomainError("Bessel functions require finite z > 0")
    flat = z.ravel()
    res = np.empty((4, flat.size))
    for start in range(0, flat.size, _CHUNK):
        zc = flat[start:start + _CHUNK].astype(_LD)
        small = zc <= SERIES_LIMIT
        block = np.empty((4, zc.size), dtype=_LD)
        if small.any():
            block[:, small] = np.array(_series(zc[small]))
        if (~small).any():
            block[:, ~small] = np.array(_asymptotic(zc[~small]))
        res[:, start:start + _CHUNK] = block.astype(float)
    return tuple(r.reshape(z.shape) for r in res)


def hankel01(z):
    """Return ``(H0(z), H1(z))`` of the first kind for positive real ``z``."""
    j0, j1, y0, y1 = bessel_jy01(z)
    return j0 + 1j * y0, j1 + 1j * y1


def hankel1_0(z):
    r"""Hankel function :math:`H_0^{(1)}(z) = J_0(z) + i Y_0(z)`.

    Parameters
    ----------
    z : float or array_like
        Positive real argument(s).

    Returns
    -------
    complex or ndarray
        Relative accuracy about 1e-13 on (0, 700].
    """
    h0, _ = hankel01(z)
    return complex(h0) if np.ndim(h0) == 0 else h0


def hankel1_1(z):
    r"""Hankel function :math:`H_1^{(1)}(z) = J_1(z) + i Y_1(z)`."""
    _, h1 = hankel01(z)
    return complex(h1) if np.ndim(h1) == 0 else h1


# ---------------------------------------------------------------------------
# Fundamental solution and its derivatives
# ---------------------------------------------------------------------------


def radial_derivatives(k, rho, order=1):
    """Derivatives in ``rho`` of ``g(rho) = -(i/4) H0(k rho)``.

    Returns a list ``[g, g', ..., g^(order)]`` with ``order <= 3``.
    """
    rho = np.asarray(rho, dtype=float)
    u = k * rho
    h0, h1 = hankel01(u)
    g = [-0.25j * h0]
    if order >= 1:
        g.append(0.25j * k * h1)
    if order >= 2:
        g.append(0.25j * k * k * (h0 - h1 / u))
    if order >= 3:
        g.append(0.25j * k ** 3 * (-h1 - h0 / u + 2 * h1 / (u * u)))
    return g


def gamma_derivatives(k, d, order=0):
    """Cartesian derivatives of ``Gamma^k`` as a function of ``d = x - z``.

    Parameters
    ----------
    k : float
        Wavenumber.
    d : ndarray, shape (..., 2)
        Displacements ``x - z``; must be nonzero.
    order : int
        Highest derivative order (0 to 3).

    Returns
    -------
    list of ndarray
        ``[G, grad (...,2), hess (...,2,2), third (...,2,2,2)]`` truncated to
        ``order``. Derivatives act on the second argument ``x``.
    """
    d = np.asarray(d, dtype=float)
    rho = np.hypot(d[..., 0], d[..., 1])
    if np.any(rho == 0):
        raise DomainError("coincident points in fundamental solution")
    g = radial_derivatives(k, rho, order)
    out = [g[0]]
    if order == 0:
        return out
    e = d / rho[..., None]
    out.append(g[1][..., None] * e)
    if order == 1:
        return out
    eye = np.eye(2)
    ee = e[..., :, None] * e[..., None, :]
    a = g[1] / rho
    out.append(g[2][..., None, None] * ee + a[..., None, None] * (eye - ee))
    if order == 2:
        return out
    c1 = g[3] - 3 * g[2] / rho + 3 * g[1] / rho ** 2
    c2 = g[2] / rho - g[1] / rho ** 2
    eee = ee[..., :, :, None] * e[..., None, None, :]
    sym = (eye[:, :, None] * e[..., None, None, :]
           + eye[:, None, :] * e[..., None, :, None]
           + eye[None, :, :] * e[..., :, None, None])
    out.append(c1[..., None, None, None] * eee + c2[..., None, None, None] * sym)
    return out


def _check_points(z, x):
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(x))):
        raise DomainError("points must be finite")
    return z, x


def gamma_k(k, z, x):
    r"""Fundamental solution :math:`\Gamma^k(z,x) = -\tfrac{i}{4}H_0^{(1)}(k|z-x|)`.

    Parameters
    ----------
    k : float
        Positive wavenumber.
    z, x : array_like, shape (2,) or (..., 2)
        Source and target points.

    Returns
    -------
    complex or ndarray

    Raises
    ------
    DomainError
        If ``z`` and ``x`` coincide.
    """
    z, x = _check_points(z, x)
    d = x - z
    rho = np.hypot(d[..., 0], d[..., 1])
    if np.any(rho == 0):
        raise DomainError("gamma_k: coincident points")
    val = -0.25j * hankel1_0(k * rho)
    return complex(val) if np.ndim(val) == 0 else val


def gamma_k_grad(k, z, x):
    """Gradient of ``gamma_k`` in the second argument ``x``."""
    z, x = _check_points(z, x)
    g = gamma_derivatives(k, x - z, 1)[1]
    return g


def gamma_k_hessian(k, z, x):
    """Hessian (2x2) of ``gamma_k`` in the second argument ``x``."""
    z, x = _check_points(z, x)
    return gamma_derivatives(k, x - z, 2)[2]
