r"""Dense Nyström reference solver for the exterior Neumann function.

For a source ``z`` outside the disks, the trace ``u = N(z, .)`` on the union of
circles solves the second-kind equation

.. math::
    \tfrac12 u(y) + \int_{\partial\Omega} \partial_{\nu_w}\Gamma^k(y, w)\, u(w)\, d\sigma_w
    = \Gamma^k(z, y),

and off the boundary

.. math::
    N(z, x) = \Gamma^k(z, x) - \int_{\partial\Omega} \partial_{\nu_w}\Gamma^k(x, w)\, u(w)\, d\sigma_w .

On each circle the kernel is split as ``K1(t,s) log(1 - cos(t-s)) + K2(t,s)``
and the log part is integrated with spectral product weights; interactions
between different circles use the plain trapezoidal rule. The same equation
holds for a source on a circle, where ``u - 2 Gamma(z, .)`` is regular; that
route gives boundary-to-boundary values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .geometry import BoundaryGrid, DiskDomain, boundary_normal, boundary_point, require_valid
from .quadrature import (
    TWO_PI,
    cosine_to_exponential,
    periodic_grid,
)
from .special_functions import EULER_GAMMA, DomainError, bessel_jy01, gamma_derivatives, hankel01

logger = logging.getLogger(__name__)


class FactorizationError(RuntimeError):
    """The collocation matrix is singular or too badly conditioned."""


def log_product_weights(n):
    """Product weights for ``int log(1 - cos(t_i - s)) f(s) ds`` on ``n`` nodes.

    Returns the circulant generator ``w[d]`` so that the weight of node ``j``
    for target node ``i`` is ``w[(j - i) % n]``.
    """
    m = np.arange(1, n // 2 + 1)
    c = np.concatenate(([-np.log(2.0)], -2.0 / m))
    return np.real(TWO_PI * np.fft.ifft(cosine_to_exponential(c, n)))


def _same_circle_rho(r, n):
    d = TWO_PI * np.arange(n) / n
    return d, 2.0 * r * np.abs(np.sin(d / 2.0))


def _circulant(gen):
    """Matrix ``C[i, j] = gen[(j - i) % n]``."""
    n = gen.size
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return gen[idx]


def split_double_layer(k, r, n):
    """Circulant generators of the same-circle double-layer kernel (with ``ds`` Jacobian).

    Returns ``(full, k1, k2)`` where ``full = k1 * log(1 - cos) + k2`` and the
    zero-lag entries hold the continuous limits.
    """
    d, rho = _same_circle_rho(r, n)
    full = np.empty(n, dtype=complex)
    k1 = np.empty(n)
    u = k * rho[1:]
    j0, j1, y0, y1 = bessel_jy01(u)
    full[1:] = 0.125j * u * (j1 + 1j * y1)
    full[0] = 1.0 / (4.0 * np.pi)
    k1[1:] = -u * j1 / (8.0 * np.pi)
    k1[0] = 0.0
    k2 = full.copy()
    k2[1:] -= k1[1:] * np.log(1.0 - np.cos(d[1:]))
    return full, k1, k2


def split_single_layer(k, r, n):
    """Circulant generators of ``Gamma`` on one circle (no Jacobian).

    Returns ``(g1, g2)`` with ``Gamma = g1 log(1 - cos) + g2`` off the diagonal;
    ``g2[0]`` is the regular limit ``(log(k r / sqrt 2) + gamma) / (2 pi) - i/4``.
    """
    d, rho = _same_circle_rho(r, n)
    g1 = np.empty(n)
    g2 = np.empty(n, dtype=complex)
    j0, j1, y0, y1 = bessel_jy01(k * rho[1:])
    g1[1:] = j0 / (4.0 * np.pi)
    g1[0] = 1.0 / (4.0 * np.pi)
    g2[1:] = -0.25j * (j0 + 1j * y0) - g1[1:] * np.log(1.0 - np.cos(d[1:]))
    g2[0] = (np.log(k * r / np.sqrt(2.0)) + EULER_GAMMA) / TWO_PI - 0.25j
    return g1, g2


@dataclass
class BemSystem:
    """Assembled and factorized collocation system ``(I/2 + K) u = f``."""

    domain: DiskDomain
    nc: int
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    angles: np.ndarray
    offsets: np.ndarray
    matrix: np.ndarray = field(repr=False)
    lu: tuple = field(repr=False)
    condition: float = np.nan

    @property
    def size(self):
        return self.nodes.shape[0]

    def disk_slice(self, i):
        return slice(self.offsets[i], self.offsets[i + 1])

    def solve(self, rhs):
        if self.size == 0:
            return np.zeros_like(rhs)
        return sla.lu_solve(self.lu, rhs)


def _cross_kernel(k, targets, nodes, normals, weights):
    """``d/dnu_w Gamma(y, w) * weight_w`` for targets ``y`` and nodes ``w``."""
    d = nodes[None, :, :] - targets[:, None, :]
    g = gamma_derivatives(k, d, 1)[1]
    return np.einsum("ijc,jc->ij", g, normals) * weights[None, :]


def assemble(domain, nc):
    """Assemble and factorize the Nyström system.

    Parameters
    ----------
    domain : DiskDomain
        Validated disk union.
    nc : int
        Nodes per circle (power of two, at least 16).

    Returns
    -------
    BemSystem

    Raises
    ------
    FactorizationError
        If the LU factorization fails or the reciprocal condition estimate is
        below ``1e-13`` (``k`` close to an interior resonance).
    """
    require_valid(domain)
    k = domain.k
    nodes, normals, weights, angles = [], [], [], []
    offsets = [0]
    for disk in domain.disks:
        grid = BoundaryGrid(disk, nc)
        nodes.append(grid.points)
        normals.append(grid.normals)
        weights.append(np.full(nc, disk.radius * TWO_PI / nc))
        angles.append(grid.angles)
        offsets.append(offsets[-1] + nc)
    if not domain.disks:
        empty = np.zeros((0, 2))
        return BemSystem(domain, nc, empty, empty, np.zeros(0), np.zeros(0),
                         np.array(offsets), np.zeros((0, 0)), None, 1.0)
    nodes = np.concatenate(nodes)
    normals = np.concatenate(normals)
    weights = np.concatenate(weights)
    angles = np.concatenate(angles)
    m = nodes.shape[0]
    mat = np.empty((m, m), dtype=complex)
    logw = log_product_weights(nc)
    h = TWO_PI / nc
    for i, di in enumerate(domain.disks):
        si = slice(offsets[i], offsets[i + 1])
        for j, dj in enumerate(domain.disks):
            sj = slice(offsets[j], offsets[j + 1])
            if i == j:
                _, k1, k2 = split_double_layer(k, di.radius, nc)
                gen = k1 * logw + k2 * h
                mat[si, sj] = _circulant(gen)
            else:
                mat[si, sj] = _cross_kernel(k, nodes[si], nodes[sj], normals[sj], weights[sj])
    mat[np.diag_indices(m)] += 0.5
    try:
        lu = sla.lu_factor(mat, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise FactorizationError(str(exc)) from None
    anorm = np.linalg.norm(mat, 1)
    rcond, info = sla.lapack.zgecon(lu[0], anorm, norm="1")
    if rcond < 1e-13:
        raise FactorizationError(f"collocation matrix nearly singular (rcond={rcond:.2e}); "
                                 "k may be close to an interior resonance")
    cond = 1.0 / rcond
    logger.debug("assembled BEM system: %d unknowns, cond ~ %.2e", m, cond)
    return BemSystem(domain, nc, nodes, normals, weights, angles, np.array(offsets),
                     mat, lu, cond)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _directional(k, disp, dirs, sign=1.0):
    """Directional derivatives of ``Gamma`` of displacement ``disp``.

    ``dirs`` is a list of arrays with shape ``disp.shape`` (one 2-vector per
    pair). Returns ``sign**len(dirs) * D^n Gamma(disp)[dirs...]``.
    """
    n = len(dirs)
    tens = gamma_derivatives(k, disp, n)[n]
    for d in dirs:
        tens = _last_axis_dot(tens, d)
    return tens * sign ** n


def _last_axis_dot(tens, d):
    # tens: (..., 2, [2, ...]) with leading shape matching d[..., :]
    lead = d.ndim - 1
    extra = tens.ndim - lead
    dd = d.reshape(d.shape[:-1] + (2,) + (1,) * (extra - 1))
    return (tens * dd).sum(axis=lead)


def _as_dirs(dirs, count):
    out = []
    for d in dirs:
        d = np.asarray(d, dtype=float)
        if d.ndim == 1:
            d = np.broadcast_to(d, (count, 2))
        out.append(d)
    return out


class NeumannEvaluator:
    """Values and derivatives of ``N(z, x)`` for a fixed disk domain.

    Parameters
    ----------
    system : BemSystem
        Factorized system; an empty domain reduces every query to ``Gamma``.
    """

    def __init__(self, system):
        self.system = system
        self.k = system.domain.k

    @property
    def domain(self):
        return self.system.domain

    # -- checks -------------------------------------------------------------
    def _check_exterior(self, pts, name):
        if self.system.size == 0:
            return
        inside = self.domain.contains(pts, closed=True)
        if inside.any():
            raise DomainError(f"{name}: point inside or on a disk: {pts[inside][0]}")

    # -- densities ------------------------------------------------------------
    def densities(self, sources, sdirs=()):
        """Boundary traces ``u_z`` (columns) for each source, optionally differentiated.

        ``sdirs`` holds at most one direction array for a derivative with
        respect to the source position.
        """
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        sdirs = _as_dirs(sdirs, sources.shape[0])
        disp = self.system.nodes[:, None, :] - sources[None, :, :]
        rhs = _directional(self.k, disp, [d[None, :, :] * np.ones_like(disp) for d in sdirs],
                           sign=-1.0)
        return self.system.solve(rhs)

    def scattered(self, sources, targets, sdirs=(), tdirs=()):
        """Regular part ``N - Gamma`` with optional source/target derivatives.

        Returns an array of shape ``(len(sources), len(targets))``.
        """
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        if self.system.size == 0:
            return np.zeros((sources.shape[0], targets.shape[0]), dtype=complex)
        u = self.densities(sources, sdirs)
        tdirs = _as_dirs(tdirs, targets.shape[0])
        disp = self.system.nodes[None, :, :] - targets[:, None, :]
        nrm = np.broadcast_to(self.system.normals[None, :, :], disp.shape)
        dirs = [np.broadcast_to(d[:, None, :], disp.shape) for d in tdirs]
        # d/dnu_w Gamma(x, w) = nu . grad Gamma(w - x); each x-derivative flips sign
        n = len(dirs)
        tens = gamma_derivatives(self.k, disp, n + 1)[n + 1]
        for d in dirs:
            tens = _last_axis_dot(tens, d)
        dl = _last_axis_dot(tens, nrm) * (-1.0) ** n
        return -((dl * self.system.weights[None, :]) @ u).T

    def coupling(self, points, order=2):
        """Precompute ``Gamma`` derivatives between ``points`` and the BEM nodes.

        The result serves :meth:`scattered_between` for repeated queries on a
        fixed point set; ``order`` bounds the total derivative count.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self._check_exterior(points, "coupling point")
        return PointCoupling(self, points, order)

    def scattered_between(self, src, tgt, sdirs=(), tdirs=()):
        """:meth:`scattered` for two precomputed :class:`PointCoupling` sets."""
        if self.system.size == 0:
            return np.zeros((src.points.shape[0], tgt.points.shape[0]), dtype=complex)
        u = self.system.solve(src.density_rhs(sdirs))
        return -(tgt.trace_rows(tdirs) @ u).T

    def free(self, sources, targets, sdirs=(), tdirs=()):
        """Free-space part ``Gamma`` with the same derivative conventions."""
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        disp = targets[None, :, :] - sources[:, None, :]
        shape = disp.shape
        dirs = [np.broadcast_to(d[:, None, :], shape) for d in _as_dirs(sdirs, sources.shape[0])]
        dirs += [np.broadcast_to(d[None, :, :], shape) for d in _as_dirs(tdirs, targets.shape[0])]
        n = len(dirs)
        tens = gamma_derivatives(self.k, disp, n)[n]
        for d in dirs:
            tens = _last_axis_dot(tens, d)
        return tens * (-1.0) ** len(sdirs)

    def field(self, sources, targets, sdirs=(), tdirs=()):
        """Full ``N(z, x)`` (free plus regular part) with derivatives."""
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        self._check_exterior(sources, "source")
        self._check_exterior(targets, "target")
        return self.free(sources, targets, sdirs, tdirs) + self.scattered(sources, targets, sdirs, tdirs)

    # -- scalar conveniences -------------------------------------------------
    def eval(self, z, x):
        """``N(z, x)`` for a single pair."""
        return complex(self.field(z, x)[0, 0])

    def eval_grad(self, z, x):
        """Gradient of ``N(z, .)`` at ``x``."""
        e = np.eye(2)
        return np.array([self.field(z, x, tdirs=[e[a]])[0, 0] for a in range(2)])

    def eval_hessian(self, z, x):
        """Hessian of ``N(z, .)`` at ``x``."""
        e = np.eye(2)
        return np.array([[self.field(z, x, tdirs=[e[a], e[b]])[0, 0] for b in range(2)]
                         for a in range(2)])

    def regular_part(self, z, x, sdirs=(), tdirs=()):
        """``R(z, x) = N(z, x) - Gamma(z, x)``; finite at ``z = x``."""
        return complex(self.scattered(z, x, sdirs, tdirs)[0, 0])


class PointCoupling:
    """Derivative tensors of ``Gamma(node - p)`` for points ``p`` and all BEM nodes."""

    def __init__(self, ev, points, order):
        sysm = ev.system
        self.points = points
        self.order = order
        self._sys = sysm
        if sysm.size:
            disp = sysm.nodes[None, :, :] - points[:, None, :]
            self._tens = gamma_derivatives(ev.k, disp, order)
        else:
            self._tens = None

    def _contract(self, n, dirs):
        if n > self.order:
            raise ValueError(f"coupling built for order {self.order}, need {n}")
        tens = self._tens[n]
        shape = tens.shape[:2] + (2,)
        for d in dirs:
            tens = _last_axis_dot(tens, np.broadcast_to(d[:, None, :], shape))
        return tens

    def density_rhs(self, sdirs=()):
        """Right-hand sides ``(nodes, points)`` of the density solve."""
        sdirs = _as_dirs(sdirs, self.points.shape[0])
        return (self._contract(len(sdirs), sdirs) * (-1.0) ** len(sdirs)).T

    def trace_rows(self, tdirs=()):
        """Rows ``(points, nodes)`` mapping densities to the scattered field."""
        tdirs = _as_dirs(tdirs, self.points.shape[0])
        n = len(tdirs)
        tens = self._contract(n + 1, tdirs)
        nrm = np.broadcast_to(self._sys.normals[None, :, :], tens.shape)
        dl = (tens * nrm).sum(axis=-1) * (-1.0) ** n
        return dl * self._sys.weights[None, :]


def neumann_evaluator(domain, nc=128):
    """Assemble a BEM system for ``domain`` and wrap it in an evaluator."""
    return NeumannEvaluator(assemble(domain, nc))


# ---------------------------------------------------------------------------
# Boundary data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryTrace:
    """Samples of ``N(z, y(t))`` on one circle, split into singular and smooth parts."""

    angles: np.ndarray
    values: np.ndarray
    singular: np.ndarray
    smooth: np.ndarray


def _trig_resample(values, n_out, axis=-1):
    """Resample periodic samples from their grid to a grid of size ``n_out``."""
    n_in = values.shape[axis]
    if n_out == n_in:
        return values
    if n_in % n_out == 0:
        sl = [slice(None)] * values.ndim
        sl[axis] = slice(None, None, n_in // n_out)
        return values[tuple(sl)]
    c = np.fft.fft(values, axis=axis) / n_in
    sign_in = (-1.0) ** np.arange(n_in)
    shape = [1] * values.ndim
    shape[axis] = n_in
    c = c * sign_in.reshape(shape)
    freq = np.fft.fftfreq(n_in, 1.0 / n_in).astype(int)
    out = np.zeros(values.shape[:axis % values.ndim] + (n_out,) + values.shape[axis % values.ndim + 1:],
                   dtype=complex)
    keep = np.abs(freq) < min(n_in, n_out) / 2
    t = periodic_grid(n_out)
    basis = np.exp(1j * np.outer(freq[keep], t))
    cm = np.moveaxis(c, axis, -1)[..., keep]
    res = cm @ basis
    return np.moveaxis(res, -1, axis) if out.ndim > 1 else res


def boundary_trace(ev, z, disk_index, nf=None):
    """Trace of ``N(z, .)`` on circle ``disk_index`` at ``nf`` grid angles.

    ``z`` must lie off the boundary; the logarithmic part is then inactive
    and the smooth part equals the full trace. Sources on the circle go
    through :func:`boundary_pair_smooth`.
    """
    sysm = ev.system
    z = np.asarray(z, dtype=float)
    disk = ev.domain.disks[disk_index]
    if abs(np.hypot(*(z - disk.zeta)) - disk.radius) < 1e-12 * disk.radius:
        raise DomainError("source lies on the traced boundary")
    ev._check_exterior(z[None, :], "source")
    u = ev.densities(z[None, :])[sysm.disk_slice(disk_index), 0]
    nf = nf or sysm.nc
    vals = _trig_resample(u, nf)
    return BoundaryTrace(periodic_grid(nf), vals, np.zeros(nf), vals)


def boundary_pair_smooth(ev, disk_index, nf):
    """Smooth part of ``N(y(t_a), y(t_b))`` for both points on one circle.

    Returns the ``nf x nf`` matrix ``N - log(1 - cos(t_a - t_b)) / (2 pi)``
    with the regular limit on the diagonal. ``nf`` must divide the number of
    BEM nodes per circle so that sources sit on collocation nodes.
    """
    sysm = ev.system
    nc = sysm.nc
    if nc % nf:
        raise ValueError(f"nf={nf} must divide the BEM node count {nc}")
    k = ev.k
    step = nc // nf
    disk = ev.domain.disks[disk_index]
    sp = sysm.disk_slice(disk_index)
    src_local = np.arange(0, nc, step)
    src = sysm.nodes[sp][src_local]
    m = sysm.size
    h = TWO_PI / nc
    # kernel d/dnu_w Gamma(y_i, w_s), continuous limit on diagonals; the
    # quadrature weights are carried by gt below
    kfull = np.empty((m, m), dtype=complex)
    ones = np.ones(nc)
    for i, di in enumerate(ev.domain.disks):
        si = sysm.disk_slice(i)
        for j, dj in enumerate(ev.domain.disks):
            sj = sysm.disk_slice(j)
            if i == j:
                full, _, _ = split_double_layer(k, di.radius, nc)
                kfull[si, sj] = _circulant(full) / di.radius
            else:
                kfull[si, sj] = _cross_kernel(k, sysm.nodes[si], sysm.nodes[sj],
                                              sysm.normals[sj], ones)
    # Gamma(y_m, w_s) with its log part integrated by product weights
    gt = np.empty((m, nf), dtype=complex)
    g1, g2 = split_single_layer(k, disk.radius, nc)
    logw = log_product_weights(nc)
    lag = (np.arange(nc)[:, None] - src_local[None, :]) % nc
    gt[sp] = disk.radius * (g1[lag] * logw[lag] + g2[lag] * h)
    for j, dj in enumerate(ev.domain.disks):
        if j == disk_index:
            continue
        sj = sysm.disk_slice(j)
        disp = sysm.nodes[sj][:, None, :] - src[None, :, :]
        gt[sj] = gamma_derivatives(k, disp, 0)[0] * sysm.weights[sj][:, None]
    rhs = -2.0 * kfull @ gt
    ut = sysm.solve(rhs)[sp][src_local]  # rows: targets on grid, cols: sources
    g1s, g2s = split_single_layer(k, disk.radius, nf)
    d = TWO_PI * np.arange(nf) / nf
    lg = np.zeros(nf)
    lg[1:] = np.log(1.0 - np.cos(d[1:]))
    gen = (2.0 * g1s - 1.0 / TWO_PI) * lg + 2.0 * g2s
    free = _circulant(gen)
    return free + ut.T


def normal_derivative_on_boundary(ev, z, disk_index):
    r"""``d/dnu_y N(z, y)`` at the BEM nodes of one circle (Maue's formula).

    Uses :math:`\partial_\nu D u = \tfrac{d}{ds} S[u'] + k^2 \nu\cdot S[\nu u]`
    with spectral tangential derivatives, which is independent of the
    collocation equation and so measures the boundary-condition residual.
    """
    sysm = ev.system
    k = ev.k
    z = np.atleast_2d(np.asarray(z, dtype=float))
    u = ev.densities(z)[:, 0]
    nc = sysm.nc
    h = TWO_PI / nc
    freq = np.fft.fftfreq(nc, 1.0 / nc)
    freq[nc // 2] = 0.0

    def dds(vals, r):
        return np.fft.ifft(1j * freq * np.fft.fft(vals)) / r

    # densities on all circles: tangential derivative and normal-weighted copies
    du = np.empty_like(u)
    for j, dj in enumerate(ev.domain.disks):
        sj = sysm.disk_slice(j)
        du[sj] = dds(u[sj], dj.radius)
    dens = np.stack([du, sysm.normals[:, 0] * u, sysm.normals[:, 1] * u], axis=1)
    di = ev.domain.disks[disk_index]
    si = sysm.disk_slice(disk_index)
    targets = sysm.nodes[si]
    single = np.zeros((nc, 3), dtype=complex)
    logw = log_product_weights(nc)
    for j, dj in enumerate(ev.domain.disks):
        sj = sysm.disk_slice(j)
        if j == disk_index:
            g1, g2 = split_single_layer(k, dj.radius, nc)
            mat = dj.radius * (_circulant(g1) * _circulant(logw) + _circulant(g2) * h)
        else:
            disp = sysm.nodes[sj][None, :, :] - targets[:, None, :]
            mat = gamma_derivatives(k, disp, 0)[0] * sysm.weights[sj][None, :]
        single += mat @ dens[sj]
    nrm = sysm.normals[si]
    tu = dds(single[:, 0], di.radius) + k * k * (nrm[:, 0] * single[:, 1] + nrm[:, 1] * single[:, 2])
    disp = targets - z
    dgamma = np.einsum("ic,ic->i", gamma_derivatives(k, disp, 1)[1], nrm)
    return dgamma - tu
