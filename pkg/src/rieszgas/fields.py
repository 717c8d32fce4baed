"""External fields V and confinement domains Omega.

A :class:`FieldSpec` pairs one domain (box, all of R^d, or a predicate
region with bounding box) with one potential family (zero, quadratic
c|x|^2, per-axis polynomial, or values tabulated on a grid with linear
interpolation).  Potentials are continuous and non-negative on the
domain; when the domain is unbounded the family must grow at infinity,
which is what keeps Gibbs measures normalizable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, RieszError

# ---------------------------------------------------------------------------
# domains


class Domain:
    d: int
    bounded: bool

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Box(Domain):
    """Axis-aligned box; ``bounds`` is a (d, 2) array of [lo, hi] per axis."""

    bounds: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim == 1:
            b = b.reshape(1, 2)
        if b.ndim != 2 or b.shape[1] != 2 or not np.all(b[:, 0] < b[:, 1]):
            raise RieszError(f"box bounds must be (d, 2) with lo < hi, got {b!r}")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.bounds, other.bounds)

    @property
    def d(self) -> int:
        return self.bounds.shape[0]

    bounded = True

    def contains(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((p >= self.bounds[:, 0]) & (p <= self.bounds[:, 1]), axis=1)

    def volume(self) -> float:
        return float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))

    def to_dict(self):
        return {"kind": "box", "bounds": self.bounds.tolist()}


@dataclass(frozen=True)
class FullSpace(Domain):
    """All of R^d."""

    dim: int
    bounded = False

    @property
    def d(self) -> int:
        return self.dim

    def contains(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.ones(p.shape[0], dtype=bool)

    def to_dict(self):
        return {"kind": "all", "d": self.dim}


@dataclass(frozen=True)
class Region(Domain):
    """Membership predicate plus bounding box.

    The predicate is trusted to describe a region with reasonably smooth
    boundary; nothing here verifies that, it is the caller's
    responsibility.
    """

    predicate: Callable[[np.ndarray], bool]
    bbox: Box
    bounded = True

    @property
    def d(self) -> int:
        return self.bbox.d

    def contains(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        inside = self.bbox.contains(p)
        for i in np.flatnonzero(inside):
            inside[i] = bool(self.predicate(p[i]))
        return inside

    def to_dict(self):
        raise RieszError("predicate regions are not serializable; use a box domain")


# ---------------------------------------------------------------------------
# potential families


class Potential:
    coercive: bool

    def value(self, points) -> np.ndarray:
        raise NotImplementedError

    def grad(self, points) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroField(Potential):
    coercive = False

    def value(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.zeros(p.shape[0])

    def grad(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.zeros_like(p)

    def to_dict(self):
        return {"kind": "zero"}


@dataclass(frozen=True)
class Quadratic(Potential):
    """V(x) = c |x|^2 with c > 0."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise RieszError(f"quadratic coefficient must be positive, got {self.c}")

    coercive = True

    def value(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return self.c * np.sum(p * p, axis=1)

    def grad(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return 2.0 * self.c * p

    def to_dict(self):
        return {"kind": "quadratic", "c": self.c}


@dataclass(frozen=True, eq=False)
class AxisPolynomial(Potential):
    """V(x) = sum_i p_i(x_i) with one coefficient row per axis.

    ``coeffs`` is a (d, k) array in increasing-degree order.  Coercivity
    requires every axis polynomial to have even top degree with positive
    leading coefficient.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.shape[1] < 1:
            raise RieszError("axis polynomial needs at least one coefficient per axis")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __eq__(self, other):
        if not isinstance(other, AxisPolynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    @property
    def coercive(self) -> bool:
        for row in self.coeffs:
            nz = np.flatnonzero(row)
            if nz.size == 0:
                return False
            top = nz[-1]
            if top % 2 != 0 or top == 0 or row[top] <= 0:
                return False
        return True

    def value(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        total = np.zeros(p.shape[0])
        for axis, row in enumerate(self.coeffs):
            total += np.polynomial.polynomial.polyval(p[:, axis], row)
        return total

    def grad(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        g = np.zeros_like(p)
        for axis, row in enumerate(self.coeffs):
            der = np.polynomial.polynomial.polyder(row)
            g[:, axis] = np.polynomial.polynomial.polyval(p[:, axis], der)
        return g

    def to_dict(self):
        return {"kind": "poly", "coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class Tabulated(Potential):
    """Values on a regular 1-D grid, evaluated by linear interpolation.

    The gradient is the interpolant's segment slope, which jumps at the
    knots.  Only d=1 tables are supported; points outside the grid are
    clamped to the end values, so the domain should stay inside the grid.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if g.size != v.size or g.size < 2:
            raise RieszError("tabulated field needs matching grid/value arrays, length >= 2")
        if not np.all(np.diff(g) > 0):
            raise RieszError("tabulated grid must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise RieszError("tabulated field values must be finite and non-negative")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    coercive = False

    def __eq__(self, other):
        if not isinstance(other, Tabulated):
            return NotImplemented
        return np.array_equal(self.grid, other.grid) and np.array_equal(
            self.values, other.values
        )

    def value(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if p.shape[1] != 1:
            raise RieszError("tabulated fields are 1-D only")
        return np.interp(p[:, 0], self.grid, self.values)

    def grad(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if p.shape[1] != 1:
            raise RieszError("tabulated fields are 1-D only")
        slopes = np.diff(self.values) / np.diff(self.grid)
        idx = np.clip(np.searchsorted(self.grid, p[:, 0], side="right") - 1, 0, slopes.size - 1)
        return slopes[idx].reshape(-1, 1)

    def to_dict(self):
        return {"kind": "tabulated", "grid": self.grid.tolist(), "values": self.values.tolist()}


# ---------------------------------------------------------------------------
# the pairing


@dataclass(frozen=True)
class FieldSpec:
    """Confinement domain plus external field.

    Rejects non-coercive potentials on unbounded domains at construction
    time, since those make both minimization and sampling ill-posed.
    """

    domain: Domain
    field: Potential

    def __post_init__(self):
        if not self.domain.bounded and not self.field.coercive:
            raise RieszError("unbounded domain requires a coercive field family")

    @property
    def d(self) -> int:
        return self.domain.d

    def contains(self, points) -> np.ndarray:
        return self.domain.contains(points)

    def value(self, points) -> np.ndarray:
        return self.field.value(points)

    def grad(self, points) -> np.ndarray:
        return self.field.grad(points)

    def require_inside(self, points):
        inside = self.contains(points)
        if not np.all(inside):
            bad = int(np.flatnonzero(~inside)[0])
            raise DomainError(f"point {bad} lies outside the confinement domain")

    def confinement_box(self, level: float) -> Box:
        """Axis-aligned box containing the sublevel set {V <= level}.

        For bounded domains this is the domain's own box.  For unbounded
        domains the box is found by doubling search along each axis; it
        is where samplers and minimizers place their initial points.
        """
        if isinstance(self.domain, Box):
            return self.domain
        if isinstance(self.domain, Region):
            return self.domain.bbox
        d = self.d
        bounds = np.empty((d, 2))
        for axis in range(d):
            hi = 1.0
            unit = np.zeros(d)
            unit[axis] = 1.0
            for _ in range(200):
                if self.field.value(hi * unit)[0] > level and self.field.value(-hi * unit)[0] > level:
                    break
                hi *= 2.0
            else:
                raise RieszError("field does not reach the requested level; not coercive?")
            bounds[axis] = (-hi, hi)
        return Box(bounds)

    def to_dict(self) -> dict:
        return {"domain": self.domain.to_dict(), "field": self.field.to_dict()}

    @staticmethod
    def from_dict(data: dict) -> "FieldSpec":
        dom = data["domain"]
        if dom["kind"] == "box":
            domain = Box(np.asarray(dom["bounds"]))
        elif dom["kind"] == "all":
            domain = FullSpace(int(dom["d"]))
        else:
            raise RieszError(f"unknown domain kind {dom['kind']!r}")
        fld = data["field"]
        kind = fld["kind"]
        if kind == "zero":
            field = ZeroField()
        elif kind == "quadratic":
            field = Quadratic(float(fld["c"]))
        elif kind == "poly":
            field = AxisPolynomial(np.asarray(fld["coeffs"]))
        elif kind == "tabulated":
            field = Tabulated(np.asarray(fld["grid"]), np.asarray(fld["values"]))
        else:
            raise RieszError(f"unknown field kind {kind!r}")
        return FieldSpec(domain, field)


def unit_box(d: int) -> Box:
    return Box(np.array([[0.0, 1.0]] * d))


def zero_field_on_box(bounds) -> FieldSpec:
    return FieldSpec(Box(np.asarray(bounds)), ZeroField())
