"""Reproducible experiment drivers shared by the CLI, demos and acceptance tests.

Every function is deterministic given its arguments and returns plain data
(dataclasses, dicts, arrays); file output is left to the caller.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .asymptotics import local_data, perturb_far, perturb_on_boundary, seed_constant
from .bem_oracle import boundary_pair_smooth, boundary_trace, neumann_evaluator
from .design import scattering_matrix
from .geometry import Disk, DiskDomain, SourceLine
from .inflation import EmptyBackground, init_state, march
from .quadrature import (
    TWO_PI,
    convolution_by_quadrature,
    double_convolution_closed_form,
    double_convolution_quadrature,
    log_trapezoid,
    poisson_convolution,
    poisson_derivative_convolution,
    poisson_derivative_kernel,
    poisson_kernel,
)

logger = logging.getLogger(__name__)

#: the fixed far disk of the growth benchmark
FAR_DISK = Disk((1.0, 2.5), 1.0)
#: four-disk target layout of the design benchmark
FOUR_DISK_CENTERS = ((0.5, 0.3), (0.7, 0.5), (0.5, 0.7), (0.3, 0.5))


def growth_domain(r, k=1.0):
    """Disk of radius ``r`` at the origin next to :data:`FAR_DISK`."""
    return DiskDomain((Disk((0.0, 0.0), r), FAR_DISK), k)


def four_disk_domain(k=1.0, radius=0.02):
    return DiskDomain(tuple(Disk(c, radius) for c in FOUR_DISK_CENTERS), k)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# ---------------------------------------------------------------------------
# Identity suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.deviation) and self.deviation <= self.tolerance)


RATIOS = (0.2, 0.5, 0.8)
ANGLES = tuple(TWO_PI * (j + 0.5) / 8 - np.pi for j in range(8))


def check_double_convolution(tolerance=1e-8):
    dev = 0.0
    for rho in RATIOS:
        for tau in ANGLES:
            dev = max(dev, abs(double_convolution_quadrature(1.0, rho, tau)
                               - double_convolution_closed_form(1.0, rho, tau)))
    return Check("double-convolution", dev, tolerance)


def check_fourier_convolutions(tolerance=1e-8, n_max=8):
    out = []
    for name, kernel, closed, sign in (
            ("derivative-convolution", poisson_derivative_kernel, poisson_derivative_convolution, -1),
            ("poisson-convolution", poisson_kernel, poisson_convolution, 1)):
        dev = 0.0
        for rho in RATIOS:
            for n in range(n_max + 1):
                for tau in ANGLES:
                    # quadrature runs with t_z = 0 and t_x = tau
                    quad = convolution_by_quadrature(kernel, 1.0, rho, n, tau)
                    dev = max(dev, abs(quad - closed(1.0, rho, n) * np.cos(sign * n * tau)))
        out.append(Check(name, dev, tolerance))
    return out


LOG_RULE_SIZES = (1001, 2001, 4001, 8001)


def log_rule_errors(sizes=LOG_RULE_SIZES):
    """Errors of the modified trapezoid rule for ``int_0^1 log|t - 1/2| dt``."""
    exact = np.log(0.5) - 1.0
    spacing, err = [], []
    for n in sizes:
        t = np.linspace(0.0, 1.0, n)
        err.append(abs(log_trapezoid(np.ones(n), t, 0.5) - exact))
        spacing.append(1.0 / (n - 1))
    return np.array(spacing), np.array(err)


def check_log_rule(tolerance=5e-3, window=(0.85, 1.15)):
    """Value at ``N = 1001`` and the order with the log factor divided out."""
    d, e = log_rule_errors()
    value = Check("log-rule-value", float(e[0]), tolerance)
    slope = loglog_slope(d, e / np.abs(np.log(d)))
    # deviation from the window centre, passing inside the window
    half = 0.5 * (window[1] - window[0])
    order = Check("log-rule-order", abs(slope - 0.5 * sum(window)), half)
    return [value, order], slope


SUITE = ("double-convolution", "derivative-convolution", "poisson-convolution", "log-rule-value",
         "log-rule-order")


def identity_suite(tolerance=1e-8, only=None):
    """Run the closed-form identity checks.

    Parameters
    ----------
    tolerance : float
        Tolerance for the convolution identities. The log-rule checks keep
        their own thresholds (``5e-3`` on the value, an order window).
    only : str, optional
        Substring filter on check names.
    """
    checks = [check_double_convolution(tolerance), *check_fourier_convolutions(tolerance)]
    checks.extend(check_log_rule()[0])
    if only:
        checks = [c for c in checks if only in c.name]
    return checks


# ---------------------------------------------------------------------------
# Small-disk asymptotics against the BEM
# ---------------------------------------------------------------------------


PERTURB_RADII = (0.08, 0.04, 0.02, 0.01)


def perturb_orders(radii=PERTURB_RADII, k=1.0, nc=64, n_boundary=8, nf=16):
    """Errors of the three small-disk formulas for a disk at the origin.

    Sources sit at ``(2, 0)`` and ``(-2, 0)``; the background is free space.

    Returns
    -------
    dict
        ``{"far": [...], "boundary": [...], "seed": [...]}`` errors per radius
        plus ``"slopes"``.
    """
    z = np.array([2.0, 0.0])
    x = np.array([-2.0, 0.0])
    empty = neumann_evaluator(DiskDomain((), k))
    ld = local_data(empty, z, x, np.zeros(2))
    far, bnd, seed = [], [], []
    for r in radii:
        ev = neumann_evaluator(DiskDomain((Disk((0.0, 0.0), r),), k), nc)
        far.append(abs(ev.eval(z, x) - empty.eval(z, x) - perturb_far(ld, r)))
        tr = boundary_trace(ev, z, 0, n_boundary)
        ys = r * np.stack([np.cos(tr.angles), np.sin(tr.angles)], axis=1)
        bnd.append(max(abs(tr.values[i] - perturb_on_boundary(ld, r, k, ys[i]))
                       for i in range(n_boundary)))
        seed.append(float(np.abs(boundary_pair_smooth(ev, 0, nf) - seed_constant(k, r)).max()))
    out = {"radii": list(radii), "far": far, "boundary": bnd, "seed": seed}
    out["slopes"] = {key: loglog_slope(radii, out[key]) for key in ("far", "boundary", "seed")}
    return out


# ---------------------------------------------------------------------------
# Growth benchmark
# ---------------------------------------------------------------------------


def bem_reference(domain=None, nf=256, nc=2048, disk=0):
    """Smooth boundary-pair table of one disk computed by the BEM.

    The default domain is :func:`growth_domain` at radius 1.
    """
    domain = growth_domain(1.0) if domain is None else domain
    return boundary_pair_smooth(neumann_evaluator(domain, nc), disk, nf)


@dataclass(frozen=True)
class SweepRow:
    dr: float
    mean_error: float
    max_error: float
    steps: int
    symmetry: float
    seconds: float


def inflate_sweep(drs, domain=None, nf=256, nc=2048, r0=0.01, background_nc=256,
                  reference=None, diagnostics=None, variant="stable"):
    """Grow disk 0 of ``domain`` from ``r0`` for each ``dr`` and compare with the BEM.

    Parameters
    ----------
    drs : sequence of float
    domain : DiskDomain, optional
        Disk 0 is grown from radius ``r0`` at its centre up to its radius; the
        remaining disks form the background. Defaults to
        :func:`growth_domain` at radius 1.
    reference : ndarray, optional
        Precomputed BEM table at the final radius.
    diagnostics : callable, optional
        ``diagnostics(dr)`` returns a path for the per-step CSV of that run,
        or ``None``.

    Returns
    -------
    rows : list of SweepRow
    slope : float
        Log-log slope of the mean error against ``dr`` (nan for one run).
    final : dict
        Final smooth matrices keyed by ``dr``.
    """
    domain = growth_domain(1.0) if domain is None else domain
    if not domain.disks:
        raise ValueError("domain needs a disk to grow")
    grown = domain.disks[0]
    if reference is None:
        t0 = time.perf_counter()
        reference = bem_reference(domain, nf, nc)
        logger.info("BEM reference nc=%d in %.1f s", nc, time.perf_counter() - t0)
    bg_dom = DiskDomain(domain.disks[1:], domain.k)
    bg = neumann_evaluator(bg_dom, background_nc) if bg_dom.disks else EmptyBackground(domain.k)
    rows, final = [], {}
    for dr in drs:
        t0 = time.perf_counter()
        path = diagnostics(dr) if diagnostics else None
        st, diags = march(init_state(bg, grown.zeta, r0, nf), grown.radius, dr, variant=variant,
                          diagnostics=path)
        err = np.abs(st.smooth - reference)
        rows.append(SweepRow(dr, float(err.mean()), float(err.max()), len(diags),
                             st.symmetry_residual(), time.perf_counter() - t0))
        final[dr] = st.smooth
        logger.info("dr=%g mean error %.3e (%d steps)", dr, err.mean(), len(diags))
    slope = loglog_slope([r.dr for r in rows], [r.mean_error for r in rows]) if len(rows) > 1 \
        else float("nan")
    return rows, slope, final


# ---------------------------------------------------------------------------
# Design benchmark
# ---------------------------------------------------------------------------


def bem_scattering(domain, sources=16, nc=256):
    """Scattering matrix of a disk domain evaluated with the BEM."""
    return scattering_matrix(neumann_evaluator(domain, nc), SourceLine(sources))
