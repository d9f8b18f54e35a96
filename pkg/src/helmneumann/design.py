r"""Scattering matrices over the source segment and greedy disk placement.

Sources ``z_i = (i / (N + 1), 0)`` sit on the segment ``Lambda``. The
scattering matrix is ``S_ij = d/dx_2 N(z_i, x)`` at ``x = z_j`` and the design
loop places and grows disks so that ``S`` approaches a target ``A`` in the
mean absolute deviation ``e(S)``.

The loop never assembles or solves a dense system. The Neumann function of a
domain built disk by disk is evaluated through the layered representation

.. math::
    N_m(a, b) = N_{m-1}(a, b) - \int_{\partial B_m} \partial_{\nu_w} N_{m-1}(b, w)\, N_m(a, w)\, d\sigma_w,

    N_m(a, w) = N_{m-1}(a, w) - \int_{\partial B_m} \partial_{\nu_v} N_{m-1}(a, v)\, N_m(v, w)\, d\sigma_v,

where ``N_m(v, w)`` on the circle of disk ``m`` is the boundary-pair table
produced by radius inflation.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .asymptotics import perturb_far_batch
from .bem_oracle import log_product_weights
from .geometry import ConfigError, Disk, DiskDomain, SourceLine
from .inflation import EmptyBackground, init_state, march
from .quadrature import TWO_PI, periodic_grid
from .special_functions import EULER_GAMMA, DomainError, gamma_derivatives

logger = logging.getLogger(__name__)

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


class DesignError(RuntimeError):
    """No feasible action or an ill-posed design request."""


# ---------------------------------------------------------------------------
# Layered evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PointSet:
    """Points with at most one derivative direction per point."""

    points: np.ndarray
    dirs: np.ndarray = None

    @classmethod
    def make(cls, points, dirs=()):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        dirs = list(dirs)
        if len(dirs) > 1:
            raise ValueError("layered evaluation supports one derivative per argument")
        d = None
        if dirs:
            d = np.broadcast_to(np.asarray(dirs[0], dtype=float), points.shape)
        return cls(points, d)

    @property
    def order(self):
        return 0 if self.dirs is None else 1


def free_block(k, a, b):
    """``d_a d_b Gamma(a, b)`` between two point sets (at most one direction each)."""
    disp = b.points[None, :, :] - a.points[:, None, :]
    n = a.order + b.order
    tens = gamma_derivatives(k, disp, n)[n]
    if b.dirs is not None:
        bd = b.dirs.reshape((1,) + b.dirs.shape + (1,) * (n - 1))
        tens = (tens * bd).sum(axis=2)
    if a.dirs is not None:
        tens = -(tens * a.dirs[:, None, :]).sum(axis=-1)
    return tens


class _Bound:
    """Points bound to a shared cache; derivative variants are memoized."""

    def __init__(self, points, cache):
        self.points = points
        self.cache = cache
        self._sets = {}

    def get(self, dirs):
        dirs = list(dirs)
        key = id(dirs[0]) if dirs else None
        if key not in self._sets:
            # the direction array is stored so its id stays valid
            self._sets[key] = (dirs, PointSet.make(self.points, dirs))
        return self._sets[key][1]


@dataclass(frozen=True, eq=False)
class Layer:
    """One disk of a layered domain with its boundary-pair table."""

    disk: Disk
    table: np.ndarray
    nodes: PointSet = field(init=False)
    normal_nodes: PointSet = field(init=False)
    trace_matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nf = self.table.shape[0]
        t = periodic_grid(nf)
        e = np.stack([np.cos(t), np.sin(t)], axis=-1)
        pts = self.disk.zeta + self.disk.radius * e
        object.__setattr__(self, "nodes", PointSet(pts, None))
        object.__setattr__(self, "normal_nodes", PointSet(pts, e))
        # T[v, w] integrates f(v) N(v, w) dsigma_v: product weights for the
        # log part, trapezoid for the smooth part
        logw = log_product_weights(nf)
        lag = (np.arange(nf)[:, None] - np.arange(nf)[None, :]) % nf
        tq = self.disk.radius * (logw[lag] / TWO_PI + (TWO_PI / nf) * self.table)
        object.__setattr__(self, "trace_matrix", tq)

    @property
    def weight(self):
        return TWO_PI * self.disk.radius / self.table.shape[0]


class LayeredEvaluator:
    """Neumann function of a domain assembled disk by disk.

    Parameters
    ----------
    k : float
    layers : sequence of Layer
        In insertion order; each table belongs to the domain of all disks up
        to and including its own.
    base : evaluator, optional
        Background whose regular part starts the recursion (free space when
        omitted).
    """

    def __init__(self, k, layers=(), base=None):
        self.k = float(k)
        self.layers = tuple(layers)
        self.base = base
        self._session = None
        self._queried = False

    @property
    def domain(self):
        disks = tuple(l.disk for l in self.layers)
        if self.base is not None:
            disks = tuple(self.base.domain.disks) + disks
        return DiskDomain(disks, self.k)

    def with_layer(self, disk, table):
        return LayeredEvaluator(self.k, self.layers + (Layer(disk, np.asarray(table)),), self.base)

    def without_last(self):
        return LayeredEvaluator(self.k, self.layers[:-1], self.base)

    def _check_exterior(self, pts, name):
        inside = self.domain.contains(pts, closed=True)
        if inside.any():
            raise DomainError(f"{name}: point inside or on a disk: {pts[inside][0]}")

    # -- recursion -------------------------------------------------------------
    def _scat(self, level, a, b, cache):
        key = (level, id(a), id(b))
        if key in cache:
            return cache[key]
        if level == 0:
            if self.base is None:
                out = np.zeros((a.points.shape[0], b.points.shape[0]), dtype=complex)
            else:
                out = self.base.scattered(a.points, b.points,
                                          () if a.dirs is None else [a.dirs],
                                          () if b.dirs is None else [b.dirs])
        else:
            lay = self.layers[level - 1]
            g = self._trace(level, a, cache)
            fb = self._full(level - 1, b, lay.normal_nodes, cache)
            out = self._scat(level - 1, a, b, cache) - lay.weight * g @ fb.T
        cache[key] = out
        return out

    def _full(self, level, a, b, cache):
        return free_block(self.k, a, b) + self._scat(level, a, b, cache)

    def _trace(self, level, a, cache):
        """``d_a N_level(a, w)`` at the nodes ``w`` of layer ``level``."""
        key = ("trace", level, id(a))
        if key in cache:
            return cache[key]
        lay = self.layers[level - 1]
        out = (self._full(level - 1, a, lay.nodes, cache)
               - self._full(level - 1, a, lay.normal_nodes, cache) @ lay.trace_matrix)
        cache[key] = out
        return out

    # -- public interface ------------------------------------------------------
    def scattered(self, sources, targets, sdirs=(), tdirs=()):
        """Regular part ``N - Gamma`` with at most one derivative per argument."""
        a = PointSet.make(sources, sdirs)
        b = PointSet.make(targets, tdirs)
        return self._scat(len(self.layers), a, b, {})

    def scattered_many(self, sources, targets, sdirs_list, tdirs_list):
        """Several derivative combinations sharing one recursion cache.

        Returns a dict keyed by ``(i, j)`` indices into the two lists.
        """
        cache = {}
        sa = [PointSet.make(sources, d) for d in sdirs_list]
        tb = [PointSet.make(targets, d) for d in tdirs_list]
        return {(i, j): self._scat(len(self.layers), a, b, cache)
                for i, a in enumerate(sa) for j, b in enumerate(tb)}

    def coupling(self, points, order=2):
        """Bind points for :meth:`scattered_between`.

        Consecutive ``coupling`` calls share one recursion cache, so blocks
        requested between the same bound point sets reuse lower layers. The
        next ``coupling`` call after a query starts a fresh cache.
        """
        if self._session is None or self._queried:
            self._session = {}
            self._queried = False
        return _Bound(np.atleast_2d(np.asarray(points, dtype=float)), self._session)

    def scattered_between(self, src, tgt, sdirs=(), tdirs=()):
        self._queried = True
        return self._scat(len(self.layers), src.get(sdirs), tgt.get(tdirs), src.cache)

    def free(self, sources, targets, sdirs=(), tdirs=()):
        return free_block(self.k, PointSet.make(sources, sdirs), PointSet.make(targets, tdirs))

    def field(self, sources, targets, sdirs=(), tdirs=()):
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        self._check_exterior(sources, "source")
        self._check_exterior(targets, "target")
        return self.free(sources, targets, sdirs, tdirs) + self.scattered(sources, targets, sdirs, tdirs)


# ---------------------------------------------------------------------------
# Scattering matrix and error functional
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScatteringMatrix:
    """``S_ij = d_{x_2} N(z_i, z_j)`` and the companion vectors ``N_j``.

    ``companion[:, j]`` is ``N_j = (N(z_j, z_i))_i``; its diagonal replaces the
    logarithm of the distance by the modified-trapezoid value.
    """

    S: np.ndarray
    companion: np.ndarray
    sources: np.ndarray


def diagonal_log_value(spacing):
    """Replacement for ``log|z_j - z_j|`` on a uniform source grid.

    The modified trapezoid rule gives ``(log D + log D - 4) / 2 = log D - 2``.
    """
    return np.log(spacing) - 2.0


def scattering_matrix(ev, sources):
    """Assemble :class:`ScatteringMatrix` for an evaluator and a :class:`SourceLine`.

    The free-space part of ``S`` vanishes exactly because all sources lie on a
    horizontal line; on the diagonal only the regular part contributes.
    """
    src = sources.points if isinstance(sources, SourceLine) else np.atleast_2d(sources)
    n = src.shape[0]
    if hasattr(ev, "_check_exterior"):
        ev._check_exterior(src, "source")
    if hasattr(ev, "scattered_many"):
        blocks = ev.scattered_many(src, src, [(), ()], [(), (E2,)])
        reg, dreg = blocks[(0, 0)], blocks[(0, 1)]
    else:
        reg = ev.scattered(src, src)
        dreg = ev.scattered(src, src, tdirs=[E2])
    S = np.array(dreg, dtype=complex)
    full = np.array(reg, dtype=complex)
    off = ~np.eye(n, dtype=bool)
    disp = src[None, :, :] - src[:, None, :]
    d = np.hypot(disp[..., 0], disp[..., 1])
    free = np.zeros((n, n), dtype=complex)
    if n > 1:
        free[off] = gamma_derivatives(ev.k, disp[off], 0)[0]
        # x_2 derivative of Gamma between points of one horizontal line is zero
    spacing = float(np.min(d[off])) if n > 1 else 1.0
    if isinstance(sources, SourceLine):
        spacing = sources.spacing
    lm = diagonal_log_value(spacing)
    free[~off] = (lm + np.log(ev.k / 2.0) + EULER_GAMMA) / TWO_PI - 0.25j
    return ScatteringMatrix(S, (full + free).T, src)


def error_e(S, A):
    """Mean absolute entrywise deviation ``(1/N^2) sum |A_ij - S_ij|``."""
    S = np.asarray(getattr(S, "S", S))
    A = np.asarray(A)
    if S.shape != A.shape:
        raise ValueError(f"shape mismatch {S.shape} vs {A.shape}")
    return float(np.mean(np.abs(A - S)))


def target_transform(A):
    """``S = (N + 1) / 2 (A - I / 2)``."""
    A = np.asarray(A)
    n = A.shape[0]
    return 0.5 * (n + 1) * (A - 0.5 * np.eye(n))


def inverse_target_transform(S):
    """Inverse of :func:`target_transform`: ``A = 2 S / (N + 1) + I / 2``."""
    S = np.asarray(S)
    n = S.shape[0]
    return 2.0 * S / (n + 1) + 0.5 * np.eye(n)


# ---------------------------------------------------------------------------
# Intensities and the discretized source system
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearSolve:
    intensities: np.ndarray
    residual: float
    singular_values: np.ndarray
    u: np.ndarray
    u_residual: float
    u_condition: float


def assemble_linear_system(S, companion, b, rcond=1e-12):
    """Solve ``sum_j I_j N_j = b`` and check the discretized source system.

    Parameters
    ----------
    S : ndarray, shape (N, N)
    companion : ndarray, shape (N, N)
        Columns are the vectors ``N_j``.
    b : ndarray, shape (N,)

    Returns
    -------
    LinearSolve
        ``residual`` is the relative residual of the intensity system. The
        vectors ``u_j`` solve ``(I/2 + 2/(N+1) S) u_j = I_j N_j`` column by
        column; ``u_residual`` is their largest relative residual.

    Raises
    ------
    np.linalg.LinAlgError
        If the ``N_j`` are numerically dependent; the message lists the
        singular values.
    """
    S = np.asarray(S, dtype=complex)
    Nm = np.asarray(companion, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = Nm.shape[0]
    if S.shape != (n, n) or Nm.shape != (n, n) or b.shape != (n,):
        raise ValueError("inconsistent shapes")
    sv = np.linalg.svd(Nm, compute_uv=False)
    if sv[-1] <= rcond * sv[0]:
        raise np.linalg.LinAlgError(f"N_j family is rank deficient; singular values {sv}")
    I = np.linalg.solve(Nm, b)
    bn = np.linalg.norm(b)
    res = float(np.linalg.norm(Nm @ I - b) / (bn if bn > 0 else 1.0))
    M = 0.5 * np.eye(n) + 2.0 / (n + 1) * S
    rhs = Nm * I[None, :]
    u = np.linalg.solve(M, rhs)
    scale = np.maximum(np.linalg.norm(rhs, axis=0), np.finfo(float).tiny)
    ures = float(np.max(np.linalg.norm(M @ u - rhs, axis=0) / scale))
    return LinearSolve(I, res, sv, u, ures, float(np.linalg.cond(M)))


# ---------------------------------------------------------------------------
# Design loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignParams:
    """Settings of the greedy place-and-grow loop."""

    k: float = 1.0
    sources: int = 16
    box: tuple = (0.0, 1.0, 0.05, 1.0)
    grid: tuple = (40, 40)
    refine: int = 4
    r0: float = 0.01
    dr: float = 0.005
    nf: int = 64
    margin: float = 3.0
    max_disks: int = 8
    max_steps: int = 40


@dataclass(frozen=True)
class HistoryRecord:
    action: str
    disk: int
    center: tuple
    radius: float
    e_before: float
    e_after: float
    seconds: float


HISTORY_FIELDS = ("action", "disk", "center_x1", "center_x2", "radius", "e_before", "e_after",
                  "seconds")


@dataclass(frozen=True)
class DesignRun:
    """Immutable snapshot of a design run; actions return new snapshots."""

    target: np.ndarray
    params: DesignParams
    evaluator: LayeredEvaluator
    matrix: ScatteringMatrix
    e: float
    history: tuple = ()
    states: tuple = ()

    @property
    def domain(self):
        return self.evaluator.domain

    @property
    def accepted_e(self):
        return [self.history[0].e_before] + [h.e_after for h in self.history] if self.history else [self.e]


def start_run(target, params=None):
    """Empty-domain run for a target matrix."""
    params = params or DesignParams()
    A = np.asarray(target, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError("target must be a square matrix")
    if A.shape[0] != params.sources:
        params = replace(params, sources=A.shape[0])
    ev = LayeredEvaluator(params.k)
    sm = scattering_matrix(ev, SourceLine(params.sources))
    return DesignRun(A, params, ev, sm, error_e(sm.S, A))


def _feasible(domain, center, radius, margin, ignore=None):
    """Separation from the source line and from other disks, ``margin`` radii wide."""
    cx, cy = center
    if cy - radius < margin * radius:
        return False
    for i, d in enumerate(domain.disks):
        if i == ignore:
            continue
        gap = np.hypot(cx - d.center[0], cy - d.center[1]) - radius - d.radius
        if gap < margin * max(radius, d.radius):
            return False
    return True


def _candidate_grid(box, nx, ny):
    x0, x1, y0, y1 = box
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    xs = x0 + (np.arange(nx) + 0.5) * hx
    ys = y0 + (np.arange(ny) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1), hx, hy


def predicted_errors(run, centers, r0=None):
    """Predicted ``e`` after inserting a disk of radius ``r0`` at each centre.

    The small-disk correction to ``N(z_i, z_j)`` is differentiated in the
    second coordinate of ``z_j`` through its factors.
    """
    p = run.params
    r0 = p.r0 if r0 is None else r0
    src = run.matrix.sources
    ev = run.evaluator
    k = p.k
    blocks = ev.scattered_many(src, centers, [(), (E2,)], [(), (E1,), (E2,)])
    free = {(i, j): ev.free(src, centers, sd, td)
            for i, sd in enumerate([(), (E2,)]) for j, td in enumerate([(), (E1,), (E2,)])}
    f = {key: blocks[key] + free[key] for key in blocks}
    n = f[(0, 0)].T                                    # (C, N): N(z_i, zeta)
    g = np.stack([f[(0, 1)].T, f[(0, 2)].T], axis=-1)  # grad_zeta N(z_i, zeta)
    dn = f[(1, 0)].T                                   # d_{z_j,2} N(z_j, zeta)
    dg = np.stack([f[(1, 1)].T, f[(1, 2)].T], axis=-1)
    dS = perturb_far_batch(n[:, :, None], dn[:, None, :], g[:, :, None, :], dg[:, None, :, :], r0, k)
    S_new = run.matrix.S[None, :, :] + dS
    return np.mean(np.abs(run.target[None, :, :] - S_new), axis=(1, 2))


def propose_center(run):
    """Grid search for the centre minimizing the predicted error.

    Returns
    -------
    center : ndarray
    e_pred : float
    spacing : tuple
        Final (refined) grid spacing.

    Raises
    ------
    DesignError
        If no grid point satisfies the separation margins.
    """
    p = run.params
    dom = run.domain
    pts, hx, hy = _candidate_grid(p.box, *p.grid)
    ok = np.array([_feasible(dom, c, p.r0, p.margin) for c in pts])
    if not ok.any():
        raise DesignError("no feasible grid cell")
    pts = pts[ok]
    e = predicted_errors(run, pts)
    best = _argmin_tiebreak(e, pts)
    c0 = pts[best]
    # refine around the best cell
    fx, fy = hx / p.refine, hy / p.refine
    m = p.refine
    off_x = (np.arange(-m, m + 1)) * fx
    off_y = (np.arange(-m, m + 1)) * fy
    X, Y = np.meshgrid(c0[0] + off_x, c0[1] + off_y, indexing="ij")
    fine = np.stack([X.ravel(), Y.ravel()], axis=1)
    x0, x1, y0, y1 = p.box
    fine = fine[(fine[:, 0] >= x0) & (fine[:, 0] <= x1) & (fine[:, 1] >= y0) & (fine[:, 1] <= y1)]
    fine = fine[np.array([_feasible(dom, c, p.r0, p.margin) for c in fine])]
    ef = predicted_errors(run, fine)
    best = _argmin_tiebreak(ef, fine)
    return fine[best], float(ef[best]), (fx, fy)


def _argmin_tiebreak(values, pts, rtol=1e-12):
    """Index of the minimum; ties go to the smallest ``x_2`` and then ``x_1``."""
    vmin = values.min()
    cand = np.flatnonzero(values <= vmin + rtol * max(abs(vmin), 1e-300))
    order = np.lexsort((pts[cand, 0], pts[cand, 1]))
    return int(cand[order[0]])


def _background(run, exclude_last=False):
    ev = run.evaluator.without_last() if exclude_last else run.evaluator
    return ev if ev.layers or ev.base is not None else EmptyBackground(run.params.k)


def place_disk(run, center):
    """Insert a disk of radius ``r0`` at ``center`` with the seeded boundary table."""
    p = run.params
    t0 = time.perf_counter()
    bg = _background(run)
    state = init_state(bg, center, p.r0, p.nf)
    disk = Disk(tuple(center), p.r0)
    ev = run.evaluator.with_layer(disk, state.smooth)
    sm = scattering_matrix(ev, SourceLine(p.sources))
    e_new = error_e(sm.S, run.target)
    rec = HistoryRecord("place", len(run.evaluator.layers), tuple(map(float, center)), p.r0,
                        run.e, e_new, time.perf_counter() - t0)
    return replace(run, evaluator=ev, matrix=sm, e=e_new, history=run.history + (rec,),
                   states=run.states + (state,))


def grow_step(run, dr=None):
    """Inflate the newest disk by ``dr`` and re-evaluate ``S``.

    Raises
    ------
    DesignError
        If the grown disk would violate the separation margins.
    """
    p = run.params
    dr = p.dr if dr is None else dr
    t0 = time.perf_counter()
    idx = len(run.evaluator.layers) - 1
    if idx < 0:
        raise DesignError("no disk to grow")
    state = run.states[-1]
    R = state.r + dr
    others = run.evaluator.without_last().domain
    if not _feasible(others, state.zeta, R, p.margin):
        raise DesignError(f"growing disk {idx} to radius {R:.4g} violates the separation margin")
    new_state, _ = march(state, R, dr)
    ev = run.evaluator.without_last().with_layer(Disk(tuple(state.zeta), R), new_state.smooth)
    sm = scattering_matrix(ev, SourceLine(p.sources))
    e_new = error_e(sm.S, run.target)
    rec = HistoryRecord("grow", idx, tuple(map(float, state.zeta)), R, run.e, e_new,
                        time.perf_counter() - t0)
    return replace(run, evaluator=ev, matrix=sm, e=e_new, history=run.history + (rec,),
                   states=run.states[:-1] + (new_state,))


def grow_until_stall(run):
    """Grow the newest disk while ``e`` strictly decreases.

    The first step that fails to lower ``e`` (or hits a margin) is discarded,
    leaving the previous snapshot untouched.
    """
    for _ in range(run.params.max_steps):
        try:
            trial = grow_step(run)
        except DesignError as exc:
            logger.info("growth stopped: %s", exc)
            return run
        if not trial.e < run.e:
            logger.info("growth stalled at r=%.4g (e=%.6g)", run.states[-1].r, run.e)
            return run
        run = trial
    return run


def design_loop(target, params=None, history=None, on_action=None):
    """Alternate placement and growth until no placement lowers ``e``.

    Parameters
    ----------
    target : ndarray
    params : DesignParams
    history : path-like, optional
        CSV receiving one row per accepted action.
    on_action : callable, optional
        Called with each new :class:`DesignRun` snapshot.

    Returns
    -------
    DesignRun
    """
    run = start_run(target, params)
    return continue_design(run, history, on_action)


def continue_design(run, history=None, on_action=None):
    p = run.params
    written = len(run.history)
    _write_history(history, run.history, append=False)
    while len(run.evaluator.layers) < p.max_disks:
        if run.e == 0.0:
            break
        try:
            center, e_pred, _ = propose_center(run)
        except DesignError as exc:
            logger.info("placement stopped: %s", exc)
            break
        if not e_pred < run.e:
            logger.info("no centre lowers e (best predicted %.6g >= %.6g)", e_pred, run.e)
            break
        trial = place_disk(run, center)
        if not trial.e < run.e:
            logger.info("placement at %s did not lower e", center)
            break
        run = grow_until_stall(trial)
        _write_history(history, run.history[written:], append=True)
        written = len(run.history)
        if on_action is not None:
            on_action(run)
    return run


def _write_history(path, records, append):
    if path is None:
        return
    path = Path(path)
    mode = "a" if append and path.exists() else "w"
    with path.open(mode, newline="") as fh:
        w = csv.writer(fh)
        if mode == "w":
            w.writerow(HISTORY_FIELDS)
        for h in records:
            w.writerow([h.action, h.disk, repr(h.center[0]), repr(h.center[1]), repr(h.radius),
                        repr(h.e_before), repr(h.e_after), f"{h.seconds:.3f}"])


def read_history(path):
    """Parse a history CSV into :class:`HistoryRecord` objects."""
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(HistoryRecord(row["action"], int(row["disk"]),
                                     (float(row["center_x1"]), float(row["center_x2"])),
                                     float(row["radius"]), float(row["e_before"]),
                                     float(row["e_after"]), float(row["seconds"])))
    return out


def replay(target, params, records):
    """Rebuild a run by re-applying recorded actions (no searching)."""
    run = start_run(target, params)
    for h in records:
        if h.action == "place":
            run = place_disk(run, np.array(h.center))
        elif h.action == "grow":
            dr = h.radius - run.states[-1].r
            # recorded radii are r + dr, so reuse dr itself to stay bit-identical
            run = grow_step(run, params.dr if np.isclose(dr, params.dr, rtol=1e-9) else dr)
        else:
            raise ConfigError(f"unknown action {h.action!r} in history")
    return run


# ---------------------------------------------------------------------------
# Target files
# ---------------------------------------------------------------------------


def save_matrix(path, M):
    """Write a complex matrix as JSON with ``re`` and ``im`` arrays."""
    M = np.asarray(M, dtype=complex)
    Path(path).write_text(json.dumps({"re": M.real.tolist(), "im": M.imag.tolist()}) + "\n")


def load_matrix(path):
    """Read a complex square matrix written by :func:`save_matrix`."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict) or "re" not in data or "im" not in data:
        raise ConfigError(f"{path}: needs fields 're' and 'im'")
    try:
        re = np.array(data["re"], dtype=float)
        im = np.array(data["im"], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: 're'/'im' must be numeric arrays") from None
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise ConfigError(f"{path}: 're' and 'im' must be equal square arrays")
    return re + 1j * im
