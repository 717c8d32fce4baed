"""Cell-list spatial index for short-range neighbor queries.

Points are hashed into cubic cells of side ``cell_size`` by coordinate
floor-division.  A radius-r query with r <= cell_size only has to visit
the 3^d cells around the query point, returning a candidate superset
that callers distance-filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import RieszError
from .points import PointConfiguration


@dataclass(frozen=True)
class CellIndex:
    """Read-only spatial hash of one configuration."""

    points: np.ndarray
    cell_size: float
    cells: dict           # cell coordinate tuple -> int array of point indices
    bounding_box: np.ndarray

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def cell_of(self, x) -> tuple:
        x = np.asarray(x, dtype=float).reshape(-1)
        return tuple(np.floor(x / self.cell_size).astype(int))

    def neighbor_candidates(self, x, radius: float) -> np.ndarray:
        """Indices of all points that could lie within ``radius`` of x.

        A superset of the true neighbor set whenever radius <= cell_size,
        gathered from the one-ring of cells around x.
        """
        if radius > self.cell_size * (1.0 + 1e-12):
            raise RieszError(
                f"query radius {radius} exceeds cell size {self.cell_size}"
            )
        home = self.cell_of(x)
        found = []
        for offset in product((-1, 0, 1), repeat=self.d):
            key = tuple(h + o for h, o in zip(home, offset))
            idx = self.cells.get(key)
            if idx is not None:
                found.append(idx)
        if not found:
            return np.empty(0, dtype=int)
        return np.concatenate(found)

    def pairs_within(self, radius: float) -> set:
        """All unordered index pairs at distance strictly below ``radius``."""
        if radius > self.cell_size * (1.0 + 1e-12):
            raise RieszError(
                f"pair radius {radius} exceeds cell size {self.cell_size}"
            )
        pts = self.points
        out = set()
        offsets = [o for o in product((-1, 0, 1), repeat=self.d) if o > (0,) * self.d]
        for key, idx in self.cells.items():
            # pairs inside one cell
            if idx.size > 1:
                block = pts[idx]
                diff = block[:, None, :] - block[None, :, :]
                dist = np.sqrt(np.sum(diff * diff, axis=-1))
                ii, jj = np.nonzero(dist < radius)
                for a, b in zip(ii, jj):
                    if a < b:
                        out.add((int(min(idx[a], idx[b])), int(max(idx[a], idx[b]))))
            # pairs with the lexicographically larger half of the one-ring
            for off in offsets:
                other = self.cells.get(tuple(k + o for k, o in zip(key, off)))
                if other is None:
                    continue
                diff = pts[idx][:, None, :] - pts[other][None, :, :]
                dist = np.sqrt(np.sum(diff * diff, axis=-1))
                ii, jj = np.nonzero(dist < radius)
                for a, b in zip(ii, jj):
                    p, q = int(idx[a]), int(other[b])
                    out.add((min(p, q), max(p, q)))
        return out


def build_cell_index(config: PointConfiguration, cell_size: float) -> CellIndex:
    """Hash every point of ``config`` into cells of side ``cell_size``."""
    if not cell_size > 0:
        raise RieszError(f"cell_size must be positive, got {cell_size}")
    pts = config.points
    coords = np.floor(pts / cell_size).astype(int)
    cells: dict = {}
    for i, key in enumerate(map(tuple, coords)):
        cells.setdefault(key, []).append(i)
    cells = {k: np.asarray(v, dtype=int) for k, v in cells.items()}
    if config.n:
        bbox = np.stack([pts.min(axis=0), pts.max(axis=0)], axis=1)
    else:
        bbox = np.zeros((config.d, 2))
    return CellIndex(points=pts, cell_size=float(cell_size), cells=cells, bounding_box=bbox)
