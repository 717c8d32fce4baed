"""Finite point configurations in R^d and their basic transforms.

Points are stored as an immutable (n, d) float64 array.  Duplicate points
are allowed here (multiset semantics); the energy kernels are the ones
that reject them with a typed error.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, DomainError, RieszError


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    """An ordered finite set of points in R^d.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Coordinates, one row per point.  A 1-D array of length n is
        accepted as shorthand for n points in d=1.
    domain_tag : FieldSpec, optional
        Domain the configuration is asserted to live in.  Membership is
        checked at construction.
    """

    points: np.ndarray
    domain_tag: object = field(default=None, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise RieszError(f"points must be an (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise RieszError("points must have finite coordinates")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.domain_tag is not None:
            inside = self.domain_tag.contains(pts)
            if not np.all(inside):
                bad = int(np.flatnonzero(~inside)[0])
                raise DomainError(f"point {bad} lies outside the tagged domain")

    def __eq__(self, other):
        if not isinstance(other, PointConfiguration):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n


def translate(config: PointConfiguration, x) -> PointConfiguration:
    """Shift every point p to p - x, preserving order."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != config.d:
        raise DimensionMismatchError(
            f"translation vector has dimension {x.size}, configuration has {config.d}"
        )
    return PointConfiguration(config.points - x)


def rescale(config: PointConfiguration, m: float) -> PointConfiguration:
    """Apply the density-scaling map: every point p becomes m**(1/d) * p.

    Maps a configuration of mean density m to density 1; the inverse map
    is ``rescale(_, 1/m)``.
    """
    if not m > 0:
        raise RieszError(f"scaling mass m must be positive, got {m}")
    factor = m ** (1.0 / config.d)
    return PointConfiguration(config.points * factor)


def finite_density(config: PointConfiguration, R: float) -> float:
    """Points per unit volume inside the closed centered cube of side R."""
    if not R > 0:
        raise RieszError(f"window side R must be positive, got {R}")
    if config.n == 0:
        return 0.0
    inside = np.all(np.abs(config.points) <= R / 2.0, axis=1)
    return float(np.count_nonzero(inside)) / R**config.d


def window_restrict(config: PointConfiguration, R: float, center=None) -> PointConfiguration:
    """Restrict to the closed cube of side R centered at ``center`` (default origin)."""
    if not R > 0:
        raise RieszError(f"window side R must be positive, got {R}")
    if center is None:
        center = np.zeros(config.d)
    center = np.asarray(center, dtype=float).reshape(-1)
    inside = np.all(np.abs(config.points - center) <= R / 2.0, axis=1)
    return PointConfiguration(config.points[inside])


def points_to_csv(config: PointConfiguration) -> str:
    """Serialize to CSV: header line ``# d=<d> n=<n>``, one row per point."""
    buf = io.StringIO()
    buf.write(f"# d={config.d} n={config.n}\n")
    for row in config.points:
        buf.write(",".join(format(v, ".17g") for v in row))
        buf.write("\n")
    return buf.getvalue()


def points_from_csv(text: str) -> PointConfiguration:
    """Parse the CSV format produced by :func:`points_to_csv`."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise RieszError("missing '# d=<d> n=<n>' header line")
    header = lines[0].lstrip("#").split()
    try:
        meta = dict(item.split("=") for item in header)
        d, n = int(meta["d"]), int(meta["n"])
    except (ValueError, KeyError) as exc:
        raise RieszError(f"malformed CSV header {lines[0]!r}") from exc
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    pts = np.array(rows, dtype=float).reshape(len(rows), -1)
    if pts.shape != (n, d):
        raise RieszError(f"CSV body shape {pts.shape} does not match header (n={n}, d={d})")
    return PointConfiguration(pts)
