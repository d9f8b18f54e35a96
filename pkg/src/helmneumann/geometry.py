"""Disk-union domains, circle parameterizations and the source segment.

A domain is an ordered list of disjoint disks together with the wavenumber
``k``. Circles are parameterized as ``y(t) = center + r (cos t, sin t)`` with
the outward normal ``(cos t, sin t)``; boundary grids are anchored so that the
first node lies at angle pi.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quadrature import periodic_grid

logger = logging.getLogger(__name__)

#: relative separation margin enforced on top of strict non-touching
SEPARATION_MARGIN = 1e-3


class ConfigError(ValueError):
    """Invalid domain or experiment configuration."""


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 2 or not all(np.isfinite(c)):
            raise ConfigError(f"disk center must be two finite numbers, got {self.center!r}")
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0):
            raise ConfigError(f"disk radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    @property
    def zeta(self):
        return np.array(self.center)


@dataclass(frozen=True)
class DiskDomain:
    disks: tuple = ()
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "disks", tuple(self.disks))
        if not (np.isfinite(self.k) and self.k > 0):
            raise ConfigError(f"wavenumber k must be positive, got {self.k!r}")

    def with_disk(self, disk):
        return DiskDomain(self.disks + (disk,), self.k)

    def replace_disk(self, index, disk):
        disks = list(self.disks)
        disks[index] = disk
        return DiskDomain(tuple(disks), self.k)

    def contains(self, points, closed=True):
        """Boolean mask of points inside (or on) any disk."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        mask = np.zeros(points.shape[0], dtype=bool)
        for d in self.disks:
            dist = np.hypot(*(points - d.zeta).T)
            mask |= dist <= d.radius if closed else dist < d.radius
        return mask


@dataclass(frozen=True)
class SourceLine:
    """``N`` equispaced sources ``z_j = (j / (N + 1), 0)`` on the unit segment."""

    count: int

    def __post_init__(self):
        if int(self.count) < 1:
            raise ConfigError("source count must be a positive integer")

    @property
    def points(self):
        j = np.arange(1, self.count + 1)
        return np.stack([j / (self.count + 1.0), np.zeros(self.count)], axis=1)

    @property
    def spacing(self):
        return 1.0 / (self.count + 1.0)


@dataclass(frozen=True)
class BoundaryGrid:
    """Equispaced nodes on one circle, first node at angle pi."""

    disk: Disk
    n: int
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 16 or self.n & (self.n - 1):
            raise ConfigError(f"grid size must be a power of two >= 16, got {self.n}")
        object.__setattr__(self, "angles", periodic_grid(self.n))

    @property
    def points(self):
        return boundary_point(self.disk, self.angles)

    @property
    def normals(self):
        return boundary_normal(self.disk, self.angles)


def boundary_point(disk, t):
    """Point ``center + r (cos t, sin t)`` on the circle of ``disk``."""
    t = np.asarray(t, dtype=float)
    return disk.zeta + disk.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)


def boundary_normal(disk, t):
    """Outward unit normal ``(cos t, sin t)``."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple
    gap: float

    def __str__(self):
        return f"{self.kind} between {self.indices}: gap {self.gap:.3e}"


def validate_domain(domain, upper_half=False, margin=SEPARATION_MARGIN):
    """Check the non-touching (and optionally upper half-plane) invariants.

    Parameters
    ----------
    domain : DiskDomain
    upper_half : bool
        Also require every disk to lie strictly above the source line.
    margin : float
        Extra gap, relative to the smallest radius, required between disks.

    Returns
    -------
    list of Violation
        Empty when the domain is valid.
    """
    out = []
    disks = domain.disks
    if disks:
        rmin = min(d.radius for d in disks)
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            a, b = disks[i], disks[j]
            gap = float(np.hypot(*(a.zeta - b.zeta))) - a.radius - b.radius
            if gap <= margin * rmin:
                out.append(Violation("overlap" if gap < 0 else "touching", (i, j), gap))
    if upper_half:
        for i, d in enumerate(disks):
            gap = d.center[1] - d.radius
            if gap <= 0:
                out.append(Violation("below source line", (i,), gap))
    return out


def require_valid(domain, **kw):
    bad = validate_domain(domain, **kw)
    if bad:
        raise ConfigError("invalid domain: " + "; ".join(map(str, bad)))
    return domain


# ---------------------------------------------------------------------------
# JSON configuration files
# ---------------------------------------------------------------------------


def _field_error(path, msg):
    return ConfigError(f"{path}: {msg}")


def domain_from_dict(data, where="<config>"):
    """Build a :class:`DiskDomain` (and source count) from parsed JSON."""
    if not isinstance(data, dict):
        raise _field_error(where, "top level must be an object")
    if "k" not in data:
        raise _field_error(where, "missing field 'k'")
    k = data["k"]
    if not isinstance(k, (int, float)) or isinstance(k, bool) or not k > 0:
        raise _field_error(f"{where}: field 'k'", f"must be a positive number, got {k!r}")
    raw = data.get("disks", [])
    if not isinstance(raw, list):
        raise _field_error(f"{where}: field 'disks'", "must be an array")
    disks = []
    for i, item in enumerate(raw):
        loc = f"{where}: field 'disks[{i}]'"
        if not isinstance(item, dict) or "center" not in item or "radius" not in item:
            raise _field_error(loc, "needs 'center' and 'radius'")
        c = item["center"]
        if not (isinstance(c, list) and len(c) == 2 and all(isinstance(v, (int, float)) for v in c)):
            raise _field_error(f"{loc}.center", f"must be [x1, x2], got {c!r}")
        try:
            disks.append(Disk(tuple(c), item["radius"]))
        except (ConfigError, TypeError, ValueError) as exc:
            raise _field_error(f"{loc}.radius", str(exc)) from None
    sources = data.get("sources", 16)
    if not isinstance(sources, int) or isinstance(sources, bool) or sources < 1:
        raise _field_error(f"{where}: field 'sources'", f"must be a positive integer, got {sources!r}")
    dom = DiskDomain(tuple(disks), float(k))
    bad = validate_domain(dom)
    if bad:
        raise _field_error(f"{where}: field 'disks'", "; ".join(map(str, bad)))
    return dom, sources


def load_domain(path):
    """Read a domain JSON file; errors cite the line or field at fault."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return domain_from_dict(data, str(path))


def domain_to_dict(domain, sources=16):
    return {
        "k": domain.k,
        "disks": [{"center": list(d.center), "radius": d.radius} for d in domain.disks],
        "sources": int(sources),
    }


def save_domain(domain, path, sources=16):
    Path(path).write_text(json.dumps(domain_to_dict(domain, sources), indent=2) + "\n")
