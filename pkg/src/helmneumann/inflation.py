r"""Growing a disk by marching the boundary-pair Neumann function in its radius.

The state carries the smooth part

.. math::
    \tilde N_r(t_a, t_b) = N_r(z_r(t_a), x_r(t_b)) - \tfrac{1}{2\pi}\log(1 - \cos(t_a - t_b))

of the Neumann function of ``Omega`` with the disk ``B_r(zeta)`` added, both
points on the circle of radius ``r``, sampled on a fixed angular grid. A step
``r -> R`` applies the radius increment identity: every integral between the
concentric circles is a periodic convolution whose free-space kernel is known
in closed form up to a smooth remainder, so all of them are evaluated with
exact Fourier coefficients of the kernels. The contribution of the background
domain ``Omega`` is smooth on both circles and is integrated by the
trapezoid rule.

Two update forms are provided. ``"stable"`` halves the increment and moves the
Poisson-type series onto the new radius; the series acting on the unknown new
state is solved mode by mode. ``"simplified"`` is the direct one-sided form,
kept for comparison.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .asymptotics import seed_constant
from .bem_oracle import _circulant, split_single_layer
from .quadrature import (
    TWO_PI,
    SamplingError,
    cosine_to_exponential,
    fourier_project,
    kernel_coefficients,
    log_kernel_fourier,
    log_one_minus_cos_fourier,
    periodic_convolution,
    periodic_grid,
)
from .special_functions import DomainError, radial_derivatives

logger = logging.getLogger(__name__)

#: energy fraction allowed in the top quarter of the resolved modes
MODE_OVERFLOW = 1e-2
VARIANTS = ("stable", "simplified")


class ResolutionError(RuntimeError):
    """The state carries too much energy near the grid's Nyquist mode."""


# ---------------------------------------------------------------------------
# Background access
# ---------------------------------------------------------------------------


class EmptyBackground:
    """Background of free space: the regular part vanishes identically."""

    def __init__(self, k):
        self.k = float(k)

    def scattered(self, sources, targets, sdirs=(), tdirs=()):
        sources = np.atleast_2d(sources)
        targets = np.atleast_2d(targets)
        return np.zeros((sources.shape[0], targets.shape[0]), dtype=complex)


def _circle(zeta, r, t):
    e = np.stack([np.cos(t), np.sin(t)], axis=-1)
    return zeta + r * e, e


def _check_clear(background, zeta, R):
    """The circle of radius ``R`` must stay away from the background disks."""
    dom = getattr(background, "domain", None)
    if dom is None:
        return
    for i, d in enumerate(dom.disks):
        gap = float(np.hypot(*(d.zeta - zeta))) - d.radius - R
        if gap <= 0:
            raise DomainError(f"growing disk of radius {R:.4g} meets background disk {i}")


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InflationState:
    """Smooth boundary-pair data of the growing disk at radius ``r``.

    Attributes
    ----------
    background : object
        Evaluator of the Neumann function of ``Omega`` (needs ``k`` and
        ``scattered``).
    zeta : ndarray
        Disk centre.
    r : float
        Current radius.
    smooth : ndarray, shape (nf, nf)
        Rows are source angles, columns target angles.
    """

    background: object
    zeta: np.ndarray
    r: float
    smooth: np.ndarray = field(repr=False)
    steps: int = 0

    @property
    def k(self):
        return self.background.k

    @property
    def nf(self):
        return self.smooth.shape[0]

    @property
    def angles(self):
        return periodic_grid(self.nf)

    @property
    def modes(self):
        return self.nf // 2 - 1

    def series(self, row):
        """Fourier series in the target angle of one source row."""
        return fourier_project(self.smooth[row], self.modes)

    def symmetry_residual(self):
        return float(np.max(np.abs(self.smooth - self.smooth.T)))

    def top_mode_fraction(self):
        """Energy fraction held by the top quarter of the resolved modes."""
        c = np.abs(np.fft.fft(self.smooth, axis=1)) ** 2
        freq = np.abs(np.fft.fftfreq(self.nf, 1.0 / self.nf))
        top = freq >= 0.75 * (self.nf // 2)
        total = c.sum()
        return float(c[:, top].sum() / total) if total > 0 else 0.0

    def values(self, t_src, t_tgt):
        """Full ``N_r`` between circle points at arbitrary angles.

        Uses two-dimensional trigonometric interpolation of the smooth part
        and adds the logarithmic singular part.
        """
        t_src = np.atleast_1d(np.asarray(t_src, dtype=float))
        t_tgt = np.atleast_1d(np.asarray(t_tgt, dtype=float))
        diff = t_src[:, None] - t_tgt[None, :]
        if np.any(np.isclose(np.cos(diff), 1.0, rtol=0, atol=1e-15)):
            raise DomainError("coincident angles on the circle")
        sm = _interp2(self.smooth, t_src, t_tgt)
        return sm + np.log(1.0 - np.cos(diff)) / TWO_PI


def _interp_matrix(n, t):
    """Rows evaluating the trigonometric interpolant of grid data at ``t``."""
    m = np.arange(-(n // 2) + 1, n // 2)
    s = np.asarray(t)[:, None] - periodic_grid(n)[None, :]
    # Dirichlet kernel with the Nyquist mode taken as a cosine
    dk = np.exp(1j * s[..., None] * m).sum(axis=-1) + np.cos(0.5 * n * s)
    return dk / n


def _interp2(mat, ts, tt):
    n = mat.shape[0]
    return _interp_matrix(n, ts) @ mat @ _interp_matrix(n, tt).T


@dataclass(frozen=True)
class CircleEvaluator:
    """``N_r(z_r(t), x_r(s))`` for arbitrary angles on the grown circle."""

    state: InflationState

    def smooth(self, t_src, t_tgt):
        """Band-limited smooth part (at most ``nf / 2`` modes in each angle)."""
        return _interp2(self.state.smooth, np.atleast_1d(t_src), np.atleast_1d(t_tgt))

    def __call__(self, t_src, t_tgt):
        return self.state.values(t_src, t_tgt)


def state_to_evaluator(state):
    """Wrap a state as a boundary-pair evaluator."""
    return CircleEvaluator(state)


def init_state(background, zeta, r0, nf=256):
    """Seed the march with the small-disk constant at radius ``r0``.

    The smooth part of ``N_{r0}`` on the small circle equals the constant
    ``(2 log(k r0) + 2 gamma - i pi) / (4 pi) + R_Omega(zeta, zeta)`` up to
    ``O(r0 log r0)``.
    """
    zeta = np.asarray(zeta, dtype=float)
    if nf < 16 or nf & (nf - 1):
        raise SamplingError(f"nf must be a power of two >= 16, got {nf}")
    if not r0 > 0:
        raise DomainError("initial radius must be positive")
    _check_clear(background, zeta, r0)
    reg = complex(background.scattered(zeta, zeta)[0, 0])
    p0 = seed_constant(background.k, r0, reg)
    logger.info("seed r0=%.4g p0=%.6g%+.6gj", r0, p0.real, p0.imag)
    return InflationState(background, zeta, float(r0), np.full((nf, nf), p0, dtype=complex))


def state_from_matrix(background, zeta, r, smooth):
    """Wrap an externally computed smooth matrix (for example a BEM reference)."""
    return InflationState(background, np.asarray(zeta, dtype=float), float(r),
                          np.asarray(smooth, dtype=complex))


# ---------------------------------------------------------------------------
# Free-space kernels between concentric circles
# ---------------------------------------------------------------------------


def _lag_geometry(R1, R2, d):
    """Distance between ``R1 e(d)`` and ``R2 e(0)`` and the cosine of the lag."""
    c = np.cos(d)
    rho = np.sqrt((R1 - R2) ** 2 + 4.0 * R1 * R2 * np.sin(0.5 * d) ** 2)
    return rho, c


def free_normal_kernel(k, R1, R2, d):
    r"""Helmholtz minus Laplace normal-derivative kernel.

    :math:`\partial_{\nu_y}\Gamma^k(x, y) - \tfrac{1}{2\pi}\tfrac{R_2 - R_1\cos d}{\rho^2}`
    with ``x`` at radius ``R1`` and angle ``d``, ``y`` at radius ``R2`` and
    angle 0. Smooth even when ``R1 = R2``.
    """
    rho, c = _lag_geometry(R1, R2, d)
    out = np.zeros(np.shape(d), dtype=complex)
    ok = rho > 0
    g1 = radial_derivatives(k, rho[ok], 1)[1]
    out[ok] = (g1 - 1.0 / (TWO_PI * rho[ok])) * (R2 - R1 * c[ok]) / rho[ok]
    # at zero distance (same circle, zero lag) the limit is 0
    return out


def free_double_normal_kernel(k, R1, R2, d):
    r"""Helmholtz minus Laplace double normal derivative ``d_{nu_x} d_{nu_y} Gamma``.

    The Laplace part is
    :math:`-\tfrac{1}{2\pi}\tfrac{2R_1R_2 - (R_1^2 + R_2^2)\cos d}{\rho^4}`.
    When ``R1 = R2`` the remainder is logarithmically singular at ``d = 0``;
    callers then sample off the coincidence point.
    """
    rho, c = _lag_geometry(R1, R2, d)
    out = np.zeros(np.shape(d), dtype=complex)
    ok = rho > 0
    rr, cc = rho[ok], c[ok]
    _, g1, g2 = radial_derivatives(k, rr, 2)
    a = (R1 - R2 * cc) / rr
    b = (R1 * cc - R2) / rr
    lap1 = 1.0 / (TWO_PI * rr)
    lap2 = -1.0 / (TWO_PI * rr * rr)
    # normals are e(d) and e(0), so nu_x . nu_y = cos d
    out[ok] = -((g2 - lap2) * a * b + (g1 - lap1) / rr * (cc - a * b))
    return out


def free_outer_normal_kernel(k, R, d):
    """``d_{nu_y} Gamma(x, y) - 1/(4 pi R)`` with both points at radius ``R``; zero at ``d = 0``."""
    rho, c = _lag_geometry(R, R, d)
    out = np.zeros(np.shape(d), dtype=complex)
    ok = rho > 0
    g1 = radial_derivatives(k, rho[ok], 1)[1]
    out[ok] = g1 * R * (1.0 - c[ok]) / rho[ok] - 1.0 / (2.0 * TWO_PI * R)
    return out


def smooth_free_same_circle(k, R, n):
    """Lag generator of ``Gamma - log(1 - cos) / (4 pi)`` on one circle."""
    g1, g2 = split_single_layer(k, R, n)
    d = TWO_PI * np.arange(n) / n
    lg = np.zeros(n)
    lg[1:] = np.log(1.0 - np.cos(d[1:]))
    return (g1 - 1.0 / (2.0 * TWO_PI)) * lg + g2


def _lag_values(khat_a, khat_b):
    """Lag samples of the convolution of two kernels: ``2 pi sum a_n b_n e^{i n d}``."""
    n = khat_a.size
    return TWO_PI * n * np.fft.ifft(khat_a * khat_b)


def _same_radius_coefficients(func, n, min_oversample=64):
    """Coefficients of a kernel with an integrable singularity at lag 0 (midpoint rule)."""
    m = n * min_oversample
    t = periodic_grid(m) + np.pi / m
    vals = func(t)
    c = np.fft.fft(vals) / m * np.exp(-1j * np.fft.fftfreq(m, 1.0 / m) * (-np.pi + np.pi / m))
    idx = np.fft.fftfreq(n, 1.0 / n).astype(int)
    return c[idx % m]


def _multiplier(values, mult):
    """Apply a Fourier multiplier along the last axis."""
    return np.fft.ifft(np.fft.fft(values, axis=-1) * mult, axis=-1)


# ---------------------------------------------------------------------------
# One step
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step record.

    ``symmetry`` is the residual ``max |N(a, b) - N(b, a)|`` of the raw update,
    before the projection onto symmetric matrices.
    """

    r: float
    dr: float
    symmetry: float
    top_fraction: float
    mean_value: complex
    seconds: float
    error: float = float("nan")


def _background_blocks(bg, zeta, R, r, nf):
    t = periodic_grid(nf)
    pR, e = _circle(zeta, R, t)
    pr, _ = _circle(zeta, r, t)
    out = {"pR": pR, "pr": pr, "e": e}
    if hasattr(bg, "coupling"):
        cR, cr = bg.coupling(pR, 2), bg.coupling(pr, 2)
        sc = bg.scattered_between
    else:
        cR, cr = pR, pr
        sc = bg.scattered
    out["sc"] = sc
    out["cr"] = cr
    out["N_RR"] = sc(cR, cR)
    out["dN_Rr"] = sc(cR, cr, tdirs=[e])
    out["dN_RR"] = sc(cR, cR, tdirs=[e])
    out["ddN_Rr"] = sc(cR, cr, sdirs=[e], tdirs=[e])
    return out


def _dtilde(k, S, bgb, R, r, nf, Lc):
    """Regularized ``d_nu N_r(x_R(t_b), y_R(t))``; rows ``b``, columns ``t``."""
    h = TWO_PI / nf
    rho = r / R
    width = (R - r) / R
    k2 = kernel_coefficients(lambda d: free_double_normal_kernel(k, R, r, d), nf, width)
    J = (_circulant(_lag_values(k2, Lc))
         + periodic_convolution(S, k2, axis=1)
         + periodic_convolution(bgb["ddN_Rr"], Lc, axis=1).T
         + h * S @ bgb["ddN_Rr"].T)
    d = TWO_PI * np.arange(nf) / nf
    dn_gen = free_outer_normal_kernel(k, R, d)
    n = np.abs(np.fft.fftfreq(nf, 1.0 / nf))
    series = _multiplier(S, n * rho ** n)
    return _circulant(dn_gen) + bgb["dN_RR"] - r * J - series / (2.0 * R)


def _raw_update(state, S, dr, variant):
    """The increment identity applied to the smooth matrix ``S``."""
    nf = state.nf
    k = state.k
    r = state.r
    R = r + dr
    zeta = state.zeta
    _check_clear(state.background, zeta, R)
    h = TWO_PI / nf
    rho = r / R
    width = dr / R
    n = np.abs(np.fft.fftfreq(nf, 1.0 / nf))
    Lc = cosine_to_exponential(log_kernel_fourier(R, r, nf // 2), nf)
    L1 = cosine_to_exponential(log_one_minus_cos_fourier(nf // 2), nf)
    bgb = _background_blocks(state.background, zeta, R, r, nf)

    # the density of the normal-derivative representation is N_r(w, x); taking
    # it from the columns (reciprocity) keeps antisymmetric errors damped,
    # while reading rows lets them grow by a few percent per step at kr ~ 1
    Dt = _dtilde(k, S.T, bgb, R, r, nf, Lc)
    I2 = periodic_convolution(Dt, L1, axis=1).T + h * S @ Dt.T
    FR = _circulant(smooth_free_same_circle(k, R, nf))

    if variant == "stable":
        kd = kernel_coefficients(lambda d: free_normal_kernel(k, R, r, d), nf, width)
        I1 = (_circulant(_lag_values(kd, Lc))
              + periodic_convolution(S, kd, axis=1)
              + periodic_convolution(bgb["dN_Rr"], Lc, axis=1).T
              + h * S @ bgb["dN_Rr"].T)
        p0 = S.mean(axis=1)
        rest = (2.0 * FR + 2.0 * bgb["N_RR"] + S + np.log(2.0) / TWO_PI - p0[:, None]
                - 2.0 * r * I1 - 2.0 * R * I2)
        c_rest = np.fft.fft(rest, axis=1)
        c_old = np.fft.fft(S, axis=1)
        lead = np.where(n == 0, 2.0, 1.0 + rho ** (2 * n))
        c_new = (c_rest - np.where(n == 0, 0.0, 1.0 - rho ** n) * c_old) / lead
        new = np.fft.ifft(c_new, axis=1)
    else:
        cr, e, sc = bgb["cr"], bgb["e"], bgb["sc"]
        Fr = _circulant(smooth_free_same_circle(k, r, nf))
        N_rr = sc(cr, cr)
        dN_rr = sc(cr, cr, tdirs=[e])
        ddN_rr = sc(cr, cr, sdirs=[e], tdirs=[e])
        k2rr = _same_radius_coefficients(lambda d: free_double_normal_kernel(k, r, r, d), nf)
        kdrr = kernel_coefficients(lambda d: free_normal_kernel(k, r, r, d), nf)
        E = (_circulant(_lag_values(k2rr, L1)) + periodic_convolution(S, k2rr, axis=1)
             + periodic_convolution(ddN_rr, L1, axis=1).T + h * S @ ddN_rr.T)
        Lq = Lc - L1
        F = _circulant(_lag_values(kdrr, Lq)) + periodic_convolution(dN_rr, Lq, axis=1).T
        # the series enters with a plus sign: halving the two series of the
        # stable form gives (rho^n - rho^2n) / 2 with positive weight
        series = _multiplier(S, np.where(n == 0, 0.0, rho ** n - rho ** (2 * n)))
        new = (S + FR - Fr + bgb["N_RR"] - N_rr - r * dr * E - r * F + 0.5 * series - R * I2)

    return new


def step(state, dr, variant="stable", symmetrize=True):
    """Advance the state from radius ``r`` to ``r + dr``.

    Parameters
    ----------
    state : InflationState
    dr : float
        Radius increment, ``0 <= dr <= r / 2``. ``dr = 0`` returns the state
        unchanged.
    variant : {"stable", "simplified"}
    symmetrize : bool
        Project the update onto symmetric matrices. The exact smooth part is
        symmetric, so the projection can only reduce the error; the raw
        residual is still reported.

    Returns
    -------
    InflationState, StepDiagnostics

    Raises
    ------
    ResolutionError
        If more than 1% of the energy sits in the top quarter of the modes.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if dr < 0:
        raise ValueError("dr must be non-negative")
    if dr == 0:
        return state, StepDiagnostics(state.r, 0.0, state.symmetry_residual(),
                                      state.top_mode_fraction(), complex(state.smooth.mean()), 0.0)
    if dr > 0.5 * state.r:
        raise ValueError(f"dr={dr:.3g} exceeds r/2 at r={state.r:.3g}")
    _check_clear(state.background, state.zeta, state.r + dr)
    t0 = time.perf_counter()
    new = _raw_update(state, state.smooth, dr, variant)
    if not np.all(np.isfinite(new)):
        raise FloatingPointError(f"non-finite state at r={state.r + dr:.6g}")
    raw_sym = float(np.max(np.abs(new - new.T)))
    if symmetrize:
        new = 0.5 * (new + new.T)
    out = InflationState(state.background, state.zeta, state.r + dr, new, state.steps + 1)
    diag = StepDiagnostics(out.r, dr, raw_sym, out.top_mode_fraction(),
                           complex(new.mean()), time.perf_counter() - t0)
    if diag.top_fraction > MODE_OVERFLOW:
        raise ResolutionError(
            f"top-mode energy fraction {diag.top_fraction:.3g} at r={out.r:.4g}; increase nf")
    return out, diag


def amplification_factor(state, dr, variant="stable", iterations=30, seed=0):
    """Dominant eigenvalue modulus of the linearized raw update at ``state``.

    The update is quadratic in the smooth matrix, so central differences give
    the Jacobian action exactly up to rounding. Values above one mean that
    perturbations grow from step to step.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(state.smooth.shape) + 0j
    v /= np.linalg.norm(v)
    eps = 1e-3 * max(1.0, float(np.abs(state.smooth).max()))
    lam = 0.0
    for _ in range(iterations):
        w = (_raw_update(state, state.smooth + eps * v, dr, variant)
             - _raw_update(state, state.smooth - eps * v, dr, variant)) / (2 * eps)
        lam = float(np.linalg.norm(w))
        v = w / lam
    return lam


# ---------------------------------------------------------------------------
# Marching
# ---------------------------------------------------------------------------


def radius_schedule(r0, r_target, dr_max, rel=0.1):
    """Radii ``r0 < r1 < ... = r_target`` with ``r_{i+1} - r_i = min(dr_max, rel r_i)``.

    The last step is shortened to land exactly on ``r_target``.
    """
    if not (0 < r0 <= r_target):
        raise ValueError("need 0 < r0 <= r_target")
    if not dr_max > 0:
        raise ValueError("dr_max must be positive")
    radii = [float(r0)]
    r = float(r0)
    while r < r_target:
        dr = min(dr_max, rel * r)
        if r + dr >= r_target * (1 - 1e-12) or r_target - (r + dr) < 1e-3 * dr:
            r = float(r_target)
        else:
            r = r + dr
        radii.append(r)
    return np.array(radii)


DIAG_FIELDS = ("step", "r", "dr", "symmetry", "top_fraction", "mean_real", "mean_imag",
               "seconds", "bem_error")


def march(state, r_target, dr_max, variant="stable", rel=0.1, diagnostics=None, callback=None,
          reference=None, symmetrize=True):
    """March the state up to ``r_target``.

    Parameters
    ----------
    diagnostics : path-like, optional
        CSV file receiving one row per step.
    callback : callable, optional
        Called as ``callback(state, diag)`` after each step.
    reference : callable, optional
        ``reference(r)`` returns a reference smooth matrix or ``None``; the
        mean absolute deviation goes into the ``error`` field.

    Returns
    -------
    InflationState, list of StepDiagnostics
    """
    radii = radius_schedule(state.r, r_target, dr_max, rel)
    diags = []
    fh = writer = None
    if diagnostics is not None:
        fh = Path(diagnostics).open("w", newline="")
        writer = csv.writer(fh)
        writer.writerow(DIAG_FIELDS)
    try:
        for i in range(1, radii.size):
            state, d = step(state, radii[i] - radii[i - 1], variant, symmetrize)
            if reference is not None:
                ref = reference(state.r)
                if ref is not None:
                    d = replace(d, error=float(np.abs(state.smooth - ref).mean()))
            diags.append(d)
            if writer is not None:
                writer.writerow([state.steps, f"{d.r:.10g}", f"{d.dr:.6g}", f"{d.symmetry:.3e}",
                                 f"{d.top_fraction:.3e}", f"{d.mean_value.real:.10g}",
                                 f"{d.mean_value.imag:.10g}", f"{d.seconds:.4f}", f"{d.error:.6e}"])
            if callback is not None:
                callback(state, d)
    finally:
        if fh is not None:
            fh.close()
    logger.info("march reached r=%.4g in %d steps", state.r, len(diags))
    return state, diags


def grow(background, zeta, r_target, dr_max, nf=256, r0=0.01, variant="stable", **kw):
    """Seed at ``r0`` and march to ``r_target``."""
    st = init_state(background, zeta, min(r0, r_target), nf)
    if r_target > st.r:
        st, _ = march(st, r_target, dr_max, variant, **kw)
    return st
