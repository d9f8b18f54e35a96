r"""Small-disk asymptotics of the exterior Neumann function.

Adding a disk :math:`B_r(\zeta)` to a domain :math:`\Omega` perturbs its
Neumann function. With ``N = N_Omega``, gradients taken in the second
argument and :math:`R_\Omega = N_\Omega - \Gamma^k` the regular part:

* both points away from the disk:
  :math:`N_r(z,x) \approx N(z,x) + \pi r^2 (k^2 N(z,\zeta)N(x,\zeta) - 2\nabla N(z,\zeta)\cdot\nabla N(x,\zeta))`;
* one point ``y`` on the new circle: a second-order Taylor-type formula with
  a doubled first-order term and log/regular-part corrections;
* both points on the new circle:
  :math:`\tfrac{1}{2\pi}\log(1-\cos\Delta\theta) + \tfrac{2\log(kr)+2\gamma-i\pi}{4\pi} + R_\Omega(\zeta,\zeta)`.

The remainders are ``O(r^3 log r)``, ``O(r^3 log r)`` and ``O(r log r)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .special_functions import EULER_GAMMA, DomainError

logger = logging.getLogger(__name__)

KR_MAX = 0.3
KR_WARN = 0.1
_E = np.eye(2)


class SmallnessWarning(UserWarning):
    """``k r`` lies in the band where the expansions are only marginal."""


def check_kr(k, r):
    """Enforce ``k r <= 0.3`` and warn above ``0.1``."""
    kr = k * r
    if kr > KR_MAX:
        raise DomainError(f"k r = {kr:.3g} exceeds {KR_MAX}")
    if kr > KR_WARN:
        warnings.warn(f"k r = {kr:.3g} above {KR_WARN}; asymptotics degrade", SmallnessWarning,
                      stacklevel=3)


@dataclass(frozen=True)
class LocalData:
    """Background quantities at the centre ``zeta`` of an inserted disk.

    Attributes
    ----------
    n_z, n_x : complex
        ``N(z, zeta)`` and ``N(x, zeta)``.
    grad_z, grad_x : ndarray, shape (2,)
        Gradients of ``N(z, .)``, ``N(x, .)`` at ``zeta``.
    hess_z, hess_x : ndarray, shape (2, 2)
        Hessians of ``N(z, .)``, ``N(x, .)`` at ``zeta``.
    reg : complex
        Regular part ``R(zeta, zeta)``.
    reg_grad : ndarray, shape (2,)
        ``grad_w R(zeta, w)`` at ``w = zeta``.
    zeta : ndarray
    k : float
    """

    n_z: complex
    n_x: complex
    grad_z: np.ndarray
    grad_x: np.ndarray
    hess_z: np.ndarray
    hess_x: np.ndarray
    reg: complex
    reg_grad: np.ndarray
    zeta: np.ndarray
    k: float


def regular_part_at_center(ev, zeta):
    """``R(zeta, zeta)`` and ``grad_w R(zeta, w)|_{w = zeta}``.

    The regular part is read from the evaluator's scattered field, which is
    smooth across the coincidence point.
    """
    zeta = np.asarray(zeta, dtype=float)
    ev._check_exterior(zeta[None, :], "zeta")
    reg = complex(ev.scattered(zeta, zeta)[0, 0])
    grad = np.array([ev.scattered(zeta, zeta, tdirs=[_E[a]])[0, 0] for a in range(2)])
    return reg, grad


def _point_data(ev, p, zeta):
    """Value, gradient and Hessian of ``N(p, .)`` at ``zeta``."""
    val = ev.field(p, zeta)[0, 0]
    grad = np.array([ev.field(p, zeta, tdirs=[_E[a]])[0, 0] for a in range(2)])
    hess = np.array([[ev.field(p, zeta, tdirs=[_E[a], _E[b]])[0, 0] for b in range(2)]
                     for a in range(2)])
    return val, grad, hess


def local_data(ev, z, x, zeta):
    """Assemble :class:`LocalData` for sources ``z``, ``x`` and centre ``zeta``."""
    zeta = np.asarray(zeta, dtype=float)
    nz, gz, hz = _point_data(ev, z, zeta)
    if x is None:
        nx, gx, hx = nz, gz, hz
    else:
        nx, gx, hx = _point_data(ev, x, zeta)
    reg, rg = regular_part_at_center(ev, zeta)
    return LocalData(complex(nz), complex(nx), gz, gx, hz, hx, reg, rg, zeta, ev.k)


def perturb_far(ld, r, k=None):
    """Leading correction ``N_r(z, x) - N(z, x)`` for points away from the disk."""
    k = ld.k if k is None else k
    if r == 0:
        return 0j
    check_kr(k, r)
    return np.pi * r * r * (k * k * ld.n_z * ld.n_x - 2.0 * np.dot(ld.grad_z, ld.grad_x))


def perturb_far_batch(n_z, n_x, grad_z, grad_x, r, k):
    """Vectorized :func:`perturb_far` over broadcastable arrays.

    ``grad_*`` carry the vector components on the last axis.
    """
    return np.pi * r * r * (k * k * n_z * n_x - 2.0 * np.sum(grad_z * grad_x, axis=-1))


def perturb_on_boundary(ld, r, k, y):
    """``N_r(z, y)`` for ``y`` on the inserted circle.

    The ``r^2 k^2`` term carries the constant ``0.5`` beside Euler's constant.
    """
    k = ld.k if k is None else k
    y = np.asarray(y, dtype=float)
    d = y - ld.zeta
    if abs(np.hypot(*d) - r) > 1e-12 * max(r, 1.0):
        raise DomainError("y is not on the inserted circle")
    check_kr(k, r)
    out = ld.n_z + 2.0 * np.dot(d, ld.grad_z) + d @ ld.hess_z @ d
    out -= r * r * k * k * 0.5 * ld.n_z * (
        0.5j * np.pi - EULER_GAMMA - 0.5 - np.log(k * r / 2.0) - 2.0 * np.pi * ld.reg)
    out -= r * r * 2.0 * np.pi * np.dot(ld.reg_grad, ld.grad_z)
    return complex(out)


def seed_constant(k, r, reg=0.0):
    """Constant block ``(2 log(k r) + 2 gamma - i pi) / (4 pi) + R(zeta, zeta)``."""
    return (2.0 * np.log(k * r) + 2.0 * EULER_GAMMA - 1j * np.pi) / (4.0 * np.pi) + reg


def seed_on_boundary_pair(reg, zeta, r, k, theta_y, theta_w):
    """``N_r(y, w)`` for two distinct points on a small inserted circle.

    Parameters
    ----------
    reg : complex
        ``R_Omega(zeta, zeta)`` of the domain without the disk.
    zeta : array_like
        Disk centre (kept for interface symmetry; the value depends only on
        the angle difference).
    """
    theta_y = np.asarray(theta_y, dtype=float)
    theta_w = np.asarray(theta_w, dtype=float)
    diff = theta_y - theta_w
    if np.any(np.isclose(np.cos(diff), 1.0, rtol=0, atol=1e-15)):
        raise DomainError("coincident angles")
    check_kr(k, r)
    return np.log(1.0 - np.cos(diff)) / (2.0 * np.pi) + seed_constant(k, r, reg)


# ---------------------------------------------------------------------------
# Singular parts on and between concentric circles
# ---------------------------------------------------------------------------


def singular_same_circle(tau):
    """``log(1 - cos tau) / (2 pi)``: both points on the circle of radius ``r``."""
    return np.log(1.0 - np.cos(tau)) / (2.0 * np.pi)


def singular_lifted(R, r, tau):
    """Singular part for one point lifted to radius ``R``; equals the same-circle part."""
    return singular_same_circle(tau)


def singular_outer_pair(R, r, tau):
    """``log(1 - cos) / (4 pi) + log(R^4 + r^4 - 2 R^2 r^2 cos) / (4 pi)``."""
    c = np.cos(tau)
    return (np.log(1.0 - c) + np.log(R ** 4 + r ** 4 - 2 * R * R * r * r * c)) / (4.0 * np.pi)


def singular_outer_normal(R, r, tau):
    r"""Singular part of the normal derivative with both points at radius ``R``.

    :math:`\tfrac{1}{4\pi R} + \tfrac{r^2}{2\pi R}\tfrac{R^2\cos\tau - r^2}{R^4+r^4-2R^2r^2\cos\tau}`.
    The constant is positive so that the sum vanishes when ``R = r``, which
    is the homogeneous Neumann condition.
    """
    c = np.cos(tau)
    return 1.0 / (4.0 * np.pi * R) + r * r / (2.0 * np.pi * R) * (R * R * c - r * r) / (
        R ** 4 + r ** 4 - 2 * R * R * r * r * c)


def singular_splits(values, R, r, tau, variant):
    """Split kernel samples into ``(singular, smooth)`` parts.

    Parameters
    ----------
    values : array_like
        Samples of the kernel at angle differences ``tau``.
    variant : {"same", "lifted", "outer", "outer_normal"}
        Which pair of circles the two points live on.
    """
    fn = {
        "same": lambda: singular_same_circle(tau),
        "lifted": lambda: singular_lifted(R, r, tau),
        "outer": lambda: singular_outer_pair(R, r, tau),
        "outer_normal": lambda: singular_outer_normal(R, r, tau),
    }[variant]
    sing = fn()
    return sing, np.asarray(values) - sing
