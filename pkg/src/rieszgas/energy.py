"""Riesz pair energies, external-field energy, gradients and move deltas.

Conventions that bite if missed:

* Every energy sums over *ordered* pairs i != j, so each unordered pair
  contributes twice.  This matches H_N = sum_{i != j} |x_i - x_j|^{-s}
  + N^{s/d} sum_i V(x_i) literally.
* Coincident points raise :class:`SingularEnergyError` rather than
  returning +inf, so optimizer line searches can backtrack on a typed
  signal.  The one exception is the truncated interaction, where pairs
  closer than tau contribute zero by definition.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .cells import CellIndex
from .errors import RieszError, SingularEnergyError
from .fields import FieldSpec
from .points import PointConfiguration


@dataclass(frozen=True)
class RieszParams:
    """System parameters: dimension d, exponent s > d, beta >= 0, N >= 1."""

    d: int
    s: float
    beta: float
    N: int

    def __post_init__(self):
        if self.d < 1 or int(self.d) != self.d:
            raise RieszError(f"dimension d must be a positive integer, got {self.d}")
        if not self.s > self.d:
            raise RieszError(f"hypersingular regime requires s > d, got s={self.s}, d={self.d}")
        if self.beta < 0:
            raise RieszError(f"inverse temperature must be >= 0, got {self.beta}")
        if self.N < 1:
            raise RieszError(f"point count N must be >= 1, got {self.N}")

    @property
    def n_pow_sd(self) -> float:
        """The field-term weight N^(s/d)."""
        return float(self.N) ** (self.s / self.d)


def _pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _check_distinct(dist: np.ndarray):
    n = dist.shape[0]
    sing = dist + np.eye(n)
    if np.any(sing == 0.0):
        ii, jj = np.nonzero(sing == 0.0)
        pairs = [(int(a), int(b)) for a, b in zip(ii, jj) if a < b]
        raise SingularEnergyError(pairs)


def pair_sum_energy(config: PointConfiguration, s: float) -> float:
    """Riesz s-energy sum over ordered pairs, sum_{i != j} |x_i - x_j|^{-s}."""
    n = config.n
    if n < 2:
        return 0.0
    dist = _pairwise_distances(config.points)
    _check_distinct(dist)
    np.fill_diagonal(dist, np.inf)
    return float(np.sum(dist**-s))


def pair_sum_energy_cells(
    config: PointConfiguration, s: float, cells: CellIndex, tau_split: float
) -> float:
    """Same sum as :func:`pair_sum_energy`, organized through the cell list.

    Near-field pairs (distance < tau_split) come from one-ring traversal
    of the index; the far field is accumulated by a direct pass over cell
    pairs.  Both parts are exact, only the traversal order differs from
    the brute-force kernel.
    """
    if cells.points is not config.points and not np.array_equal(cells.points, config.points):
        raise RieszError("cell index was built for a different configuration")
    if tau_split > cells.cell_size * (1.0 + 1e-12):
        raise RieszError("tau_split must not exceed the index cell size")
    near_pairs = cells.pairs_within(tau_split)
    pts = config.points
    near = 0.0
    for i, j in sorted(near_pairs):
        r = float(np.linalg.norm(pts[i] - pts[j]))
        if r == 0.0:
            raise SingularEnergyError([(i, j)])
        near += 2.0 * r**-s

    far = 0.0
    keys = sorted(cells.cells.keys())
    for a, ka in enumerate(keys):
        ia = cells.cells[ka]
        for kb in keys[a:]:
            ib = cells.cells[kb]
            diff = pts[ia][:, None, :] - pts[ib][None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            if ka == kb:
                np.fill_diagonal(dist, np.inf)
                mask = np.triu(dist >= tau_split)
            else:
                mask = dist >= tau_split
            if np.any(mask):
                far += 2.0 * float(np.sum(dist[mask] ** -s))
    return near + far


def total_energy(config: PointConfiguration, field: FieldSpec, params: RieszParams) -> float:
    """H_N: ordered-pair Riesz sum plus N^(s/d) * sum_i V(x_i)."""
    if config.n != params.N:
        raise RieszError(f"configuration has {config.n} points, params expect {params.N}")
    field.require_inside(config.points)
    pair = pair_sum_energy(config, params.s)
    return pair + params.n_pow_sd * float(np.sum(field.value(config.points)))


def truncated_interaction(
    config_a: PointConfiguration, config_b: PointConfiguration, s: float, tau: float
) -> float:
    """Cross-interaction over ordered pairs at distance >= tau.

    Pairs closer than tau contribute zero, so coincident points are
    permitted here.
    """
    if not tau > 0:
        raise RieszError(f"truncation radius tau must be positive, got {tau}")
    if config_a.d != config_b.d:
        raise RieszError("configurations live in different dimensions")
    if config_a.n == 0 or config_b.n == 0:
        return 0.0
    diff = config_a.points[:, None, :] - config_b.points[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    mask = dist >= tau
    if not np.any(mask):
        return 0.0
    return float(np.sum(dist[mask] ** -s))


def window_energy_density(config: PointConfiguration, s: float, R: float) -> float:
    """(1/R^d) * sum over ordered pairs inside the centered cube of side R."""
    if not R > 0:
        raise RieszError(f"window side R must be positive, got {R}")
    inside = np.all(np.abs(config.points) <= R / 2.0, axis=1)
    sub = PointConfiguration(config.points[inside])
    if sub.n < 2:
        return 0.0
    return pair_sum_energy(sub, s) / R**config.d


def gradient(config: PointConfiguration, field: FieldSpec, params: RieszParams) -> np.ndarray:
    """Gradient of :func:`total_energy` with respect to every coordinate.

    Component k at point i is
    -2 s * sum_{j != i} (x_i - x_j)_k |x_i - x_j|^{-s-2}
    + N^(s/d) * dV/dx_k (x_i).
    """
    if config.n != params.N:
        raise RieszError(f"configuration has {config.n} points, params expect {params.N}")
    field.require_inside(config.points)
    pts = config.points
    s = params.s
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    _check_distinct(dist)
    np.fill_diagonal(dist, np.inf)
    w = dist ** -(s + 2.0)
    g = -2.0 * s * np.sum(diff * w[:, :, None], axis=1)
    return g + params.n_pow_sd * field.grad(pts)


def _delta_one_point(others: np.ndarray, old: np.ndarray, new: np.ndarray, s: float) -> float:
    """Ordered-pair energy change when one point moves, others fixed."""
    d_old = np.sqrt(np.sum((others - old) ** 2, axis=1))
    d_new = np.sqrt(np.sum((others - new) ** 2, axis=1))
    if np.any(d_new == 0.0):
        j = int(np.flatnonzero(d_new == 0.0)[0])
        raise SingularEnergyError([(j, -1)], "move target coincides with another point")
    if np.any(d_old == 0.0):
        j = int(np.flatnonzero(d_old == 0.0)[0])
        raise SingularEnergyError([(j, -1)], "configuration already has coincident points")
    return 2.0 * float(np.sum(d_new**-s) - np.sum(d_old**-s))


def move_delta(
    config: PointConfiguration,
    index: int,
    new_position,
    field: FieldSpec,
    params: RieszParams,
    cells: CellIndex | None = None,
    tau_split: float | None = None,
) -> float:
    """total_energy(after moving point ``index``) - total_energy(before).

    Computed incrementally from the moved point's interactions only.
    When a cell index is supplied, near-field contributions (distance
    < tau_split) are gathered through it and the remaining far field by
    a direct pass over the complement; either way the result is exact.
    """
    n = config.n
    if not 0 <= index < n:
        raise RieszError(f"point index {index} out of range for {n} points")
    new = np.asarray(new_position, dtype=float).reshape(-1)
    if new.size != config.d:
        raise RieszError(f"new position has dimension {new.size}, expected {config.d}")
    field.require_inside(new.reshape(1, -1))
    pts = config.points
    old = pts[index]
    if np.array_equal(new, old):
        return 0.0
    mask = np.ones(n, dtype=bool)
    mask[index] = False
    s = params.s

    if cells is None:
        pair_delta = _delta_one_point(pts[mask], old, new, s)
    else:
        if tau_split is None:
            tau_split = cells.cell_size
        near_idx = np.union1d(
            cells.neighbor_candidates(old, tau_split),
            cells.neighbor_candidates(new, tau_split),
        )
        near_idx = near_idx[near_idx != index]
        near_mask = np.zeros(n, dtype=bool)
        near_mask[near_idx] = True
        far_mask = mask & ~near_mask
        pair_delta = 0.0
        if near_idx.size:
            pair_delta += _delta_one_point(pts[near_idx], old, new, s)
        if np.any(far_mask):
            pair_delta += _delta_one_point(pts[far_mask], old, new, s)

    field_delta = params.n_pow_sd * float(field.value(new)[0] - field.value(old)[0])
    return pair_delta + field_delta


def equal_spacing_energy(n: int, s: float, length: float = 1.0) -> float:
    """Closed-form ordered-pair energy of n equally spaced points on [0, length].

    2 * sum_{k=1}^{n-1} (n - k) * (k * h)^{-s} with h = length/(n-1).
    Used as an independent reference for 1-D minimizers.
    """
    if n < 2:
        return 0.0
    h = length / (n - 1)
    k = np.arange(1, n, dtype=float)
    return 2.0 * float(np.sum((n - k) * (k * h) ** -s))
