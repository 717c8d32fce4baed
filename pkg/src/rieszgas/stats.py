"""Empirical-measure statistics, pair correlations, and the limit density.

The correlation estimator is the windowed one: separations are collected
from ordered pairs whose first point lies in a centered observation cube,
each pair feeding both +v and -v bins with half weight so the estimate is
symmetric by construction.  Values are plain pair densities (counts per
unit window volume per unit separation volume), which is the
normalization under which the infinite-volume energy is recovered as

    sum over bins of |v|^{-s} rho2(v) prod_i (1 - |v_i|/R) binvol.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import RieszError
from .fields import Box, FieldSpec
from .points import PointConfiguration
from .sampler import SampleArchive


class SingularEstimatorWarning(UserWarning):
    """Correlation mass sits in a bin touching v = 0."""


# ---------------------------------------------------------------------------
# empirical measures


@dataclass(frozen=True)
class EmpiricalHistogram:
    """Normalized histogram of point positions; masses sum to one."""

    edges: tuple            # one edge array per axis
    masses: np.ndarray
    sample_count: int

    @property
    def d(self) -> int:
        return len(self.edges)

    def bin_volumes(self) -> np.ndarray:
        widths = [np.diff(e) for e in self.edges]
        vol = widths[0]
        for w in widths[1:]:
            vol = np.multiply.outer(vol, w)
        return vol

    def midpoints(self):
        return [0.5 * (e[1:] + e[:-1]) for e in self.edges]


def _normalize_edges(bins, d: int):
    if isinstance(bins, (list, tuple)) and len(bins) == d and not np.isscalar(bins[0]):
        return tuple(np.asarray(e, dtype=float) for e in bins)
    arr = np.asarray(bins, dtype=float)
    if d == 1 and arr.ndim == 1:
        return (arr,)
    raise RieszError("bins must be one edge array per axis")


def empirical_measure(config: PointConfiguration, bins) -> EmpiricalHistogram:
    """Histogram of (1/N) sum of point masses over the given bins."""
    if config.n < 1:
        raise RieszError("empirical measure needs at least one point")
    edges = _normalize_edges(bins, config.d)
    for axis, e in enumerate(edges):
        x = config.points[:, axis]
        if np.any(x < e[0]) or np.any(x > e[-1]):
            raise RieszError(f"point outside bin coverage on axis {axis}")
    counts, _ = np.histogramdd(config.points, bins=edges)
    return EmpiricalHistogram(edges=edges, masses=counts / config.n, sample_count=config.n)


def pooled_empirical_measure(archive: SampleArchive, bins) -> EmpiricalHistogram:
    """Average of the per-snapshot empirical measures of an archive.

    Snapshots share the bins and carry equal weight, so this is one big
    histogram over all points.
    """
    if len(archive) == 0:
        raise RieszError("archive holds no snapshots")
    m, n, d = archive.positions.shape
    edges = _normalize_edges(bins, d)
    flat = archive.positions.reshape(m * n, d)
    for axis, e in enumerate(edges):
        x = flat[:, axis]
        if np.any(x < e[0]) or np.any(x > e[-1]):
            raise RieszError(f"point outside bin coverage on axis {axis}")
    counts, _ = np.histogramdd(flat, bins=edges)
    return EmpiricalHistogram(edges=edges, masses=counts / (m * n), sample_count=m * n)


def total_variation(h1: EmpiricalHistogram, h2: EmpiricalHistogram) -> float:
    """TV distance between two histograms on identical bins."""
    if len(h1.edges) != len(h2.edges) or any(
        e1.shape != e2.shape or not np.allclose(e1, e2)
        for e1, e2 in zip(h1.edges, h2.edges)
    ):
        raise RieszError("histograms use different bins")
    return 0.5 * float(np.sum(np.abs(h1.masses - h2.masses)))


def rescaled_configuration(config: PointConfiguration, N: int) -> PointConfiguration:
    """Blow the configuration up to unit mean spacing: points times N^(1/d)."""
    if N < 1:
        raise RieszError("N must be >= 1")
    return PointConfiguration(config.points * float(N) ** (1.0 / config.d))


def tagged_local_configs(config: PointConfiguration, N: int, tags, window_side: float):
    """Microscopic views of the rescaled configuration around tag points.

    For each tag x, the configuration is rescaled by N^(1/d), recentered
    at N^(1/d) x, and restricted to the centered cube of the given side.
    This is the finite, computable stand-in for the tagged empirical
    process: one local snapshot per tag.
    """
    scaled = rescaled_configuration(config, N)
    factor = float(N) ** (1.0 / config.d)
    out = []
    for tag in np.atleast_2d(np.asarray(tags, dtype=float)):
        shifted = scaled.points - factor * tag
        inside = np.all(np.abs(shifted) <= window_side / 2.0, axis=1)
        out.append((tag, PointConfiguration(shifted[inside])))
    return out


# ---------------------------------------------------------------------------
# two-point correlation


@dataclass(frozen=True)
class CorrelationEstimate:
    """Binned pair density over separations, symmetric under v -> -v."""

    edges: tuple
    values: np.ndarray
    window_side: float
    sample_count: int

    @property
    def d(self) -> int:
        return len(self.edges)

    def bin_volumes(self) -> np.ndarray:
        widths = [np.diff(e) for e in self.edges]
        vol = widths[0]
        for w in widths[1:]:
            vol = np.multiply.outer(vol, w)
        return vol


def separation_bins(R: float, width: float) -> np.ndarray:
    """1-D separation edges covering [-R, R] with integer-centered bins.

    Edges fall at +-(k + 1/2) * width so that lattice separations land on
    bin midpoints and the center bin straddles v = 0.
    """
    k = int(math.floor(R / width + 0.5))
    return (np.arange(-(k + 1), k + 1) + 0.5) * width


def two_point_correlation(data, R: float, bins, center=None) -> CorrelationEstimate:
    """Windowed pair-separation density.

    ``data`` is a configuration or an archive.  Ordered pairs (p, q) with
    p inside the observation cube of side R (centered on ``center``,
    default the data bounding-box center) and q anywhere in the data are
    binned at v = p - q and v = q - p with weight 1/2 each; counts are
    normalized by window volume, bin volume, and snapshot count.
    """
    if isinstance(data, PointConfiguration):
        stack = data.points[None, :, :]
    elif isinstance(data, SampleArchive):
        stack = data.positions
    else:
        stack = np.asarray(data, dtype=float)
        if stack.ndim == 2:
            stack = stack[None, :, :]
    n_snap, n, d = stack.shape
    if not R > 0:
        raise RieszError("window side R must be positive")
    edges = _normalize_edges(bins, d)
    if center is None:
        lo = stack.reshape(-1, d).min(axis=0)
        hi = stack.reshape(-1, d).max(axis=0)
        center = 0.5 * (lo + hi)
    center = np.asarray(center, dtype=float).reshape(-1)

    shape = tuple(e.size - 1 for e in edges)
    counts = np.zeros(shape)
    any_window = False
    for snap in stack:
        inside = np.all(np.abs(snap - center) <= R / 2.0, axis=1)
        w_idx = np.flatnonzero(inside)
        if w_idx.size == 0:
            continue
        any_window = True
        diffs = snap[w_idx][:, None, :] - snap[None, :, :]
        keep = np.ones((w_idx.size, n), dtype=bool)
        keep[np.arange(w_idx.size), w_idx] = False
        seps = diffs[keep].reshape(-1, d)
        c_plus, _ = np.histogramdd(seps, bins=edges)
        c_minus, _ = np.histogramdd(-seps, bins=edges)
        counts += 0.5 * (c_plus + c_minus)
    if not any_window:
        raise RieszError("observation window contains no points")

    hist = CorrelationEstimate(
        edges=edges,
        values=counts / (R**d * n_snap),
        window_side=float(R),
        sample_count=n_snap,
    )
    vols = hist.bin_volumes()
    return CorrelationEstimate(
        edges=edges, values=hist.values / vols, window_side=float(R), sample_count=n_snap
    )


def _zero_bin_mask(edges) -> np.ndarray:
    masks = [(e[:-1] < 0.0) & (e[1:] > 0.0) for e in edges]
    out = masks[0]
    for m in masks[1:]:
        out = np.multiply.outer(out, m)
    return out.astype(bool)


def ws_from_correlation(corr: CorrelationEstimate, s: float) -> float:
    """Infinite-volume energy estimate from a binned pair density.

    Midpoint evaluation of |v|^{-s} per bin, with the finite-window
    triangular weight prod_i (1 - |v_i|/R).  Bins straddling v = 0 are
    excluded; if they carry mass a SingularEstimatorWarning is emitted.
    """
    mids = [0.5 * (e[1:] + e[:-1]) for e in corr.edges]
    grids = np.meshgrid(*mids, indexing="ij")
    norm = np.sqrt(sum(g * g for g in grids))
    weight = np.ones_like(norm)
    for g in grids:
        weight *= np.clip(1.0 - np.abs(g) / corr.window_side, 0.0, None)
    zero_bins = _zero_bin_mask(corr.edges)
    if np.any(corr.values[zero_bins] > 0.0):
        warnings.warn(
            "correlation mass in bins touching v = 0; estimate excludes it",
            SingularEstimatorWarning,
        )
    core = np.where(zero_bins, 0.0, corr.values)
    with np.errstate(divide="ignore"):
        kernel = np.where(zero_bins, 0.0, norm**-s)
    return float(np.sum(kernel * core * weight * corr.bin_volumes()))


# ---------------------------------------------------------------------------
# 1-D spacing diagnostics


def nn_spacing_stats(config: PointConfiguration):
    """Gap statistics over the central half of a sorted 1-D configuration.

    Returns (mean gap, coefficient of variation, gap array).
    """
    if config.d != 1:
        raise RieszError("spacing statistics are 1-D only")
    n = config.n
    if n < 3:
        raise RieszError("need at least 3 points")
    x = np.sort(config.points[:, 0])
    lo, hi = n // 4, n - n // 4
    core = x[lo:hi]
    gaps = np.diff(core)
    mean = float(np.mean(gaps))
    cv = float(np.std(gaps) / mean) if mean > 0 else math.inf
    return mean, cv, gaps


# ---------------------------------------------------------------------------
# the explicit limit density


@dataclass(frozen=True)
class LimitMeasure:
    """Density [(L - V)/(csd (1 + s/d))]_+^(d/s) with L fixed by mass one."""

    level: float
    csd: float
    s: float
    d: int
    field: FieldSpec
    support_box: Box
    normalization_residual: float

    def density(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        arg = (self.level - self.field.value(pts)) / (self.csd * (1.0 + self.s / self.d))
        return np.clip(arg, 0.0, None) ** (self.d / self.s)

    def __call__(self, points) -> np.ndarray:
        return self.density(points)


def _support_breakpoints(field: FieldSpec, level: float, lo: float, hi: float):
    xs = np.linspace(lo, hi, 2001)
    vals = level - field.value(xs.reshape(-1, 1))
    roots = []
    for i in range(xs.size - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(xs[i])
        elif a * b < 0.0:
            roots.append(
                brentq(lambda t: level - float(field.value([[t]])[0]), xs[i], xs[i + 1],
                       xtol=1e-14)
            )
    return sorted(roots)


def _mass_1d(field: FieldSpec, s: float, level: float, csd: float) -> float:
    if isinstance(field.domain, Box):
        lo, hi = field.domain.bounds[0]
    else:
        box = field.confinement_box(level + 1.0)
        lo, hi = box.bounds[0]
    denom = csd * (1.0 + s)

    def integrand(x):
        arg = (level - float(field.value([[x]])[0])) / denom
        return max(arg, 0.0) ** (1.0 / s)

    breaks = [b for b in _support_breakpoints(field, level, lo, hi) if lo < b < hi]
    val, _ = quad(integrand, lo, hi, points=breaks or None, limit=400,
                  epsabs=1e-12, epsrel=1e-12)
    return val


def _mass_grid(field: FieldSpec, s: float, d: int, level: float, csd: float,
               refine: int = 4) -> float:
    if isinstance(field.domain, Box):
        box = field.domain
    else:
        box = field.confinement_box(level + 1.0)
    denom = csd * (1.0 + s / d)
    prev = None
    m = 64
    for _ in range(refine):
        axes = [
            np.linspace(lo, hi, m + 1)[: -1] + 0.5 * (hi - lo) / m
            for lo, hi in box.bounds
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        rho = np.clip((level - field.value(pts)) / denom, 0.0, None) ** (d / s)
        cell = float(np.prod((box.bounds[:, 1] - box.bounds[:, 0]) / m))
        val = float(np.sum(rho) * cell)
        if prev is not None and abs(val - prev) < 1e-7 * max(1.0, abs(val)):
            return val
        prev = val
        m *= 2
    return prev


def solve_limit_measure(field: FieldSpec, s: float, d: int, csd: float) -> LimitMeasure:
    """Find the level L normalizing the limit density to total mass one.

    The mass is monotone increasing in L, so L comes from bracketing plus
    Brent root finding; the quadrature restricts itself to where the
    density is positive.
    """
    if not csd > 0:
        raise RieszError(f"csd must be positive, got {csd}")
    if not s > d:
        raise RieszError(f"need s > d, got s={s}, d={d}")
    if field.d != d:
        raise RieszError("field dimension does not match d")

    def mass(level):
        if d == 1:
            return _mass_1d(field, s, level, csd)
        return _mass_grid(field, s, d, level, csd)

    if isinstance(field.domain, Box):
        probe_box = field.domain
    else:
        probe_box = field.confinement_box(1.0)
    axes = [np.linspace(lo, hi, 41) for lo, hi in probe_box.bounds]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    v_min = float(np.min(field.value(pts)))

    lo_level = v_min
    hi_level = v_min + max(1.0, csd)
    for _ in range(200):
        if mass(hi_level) >= 1.0:
            break
        hi_level = v_min + 2.0 * (hi_level - v_min)
    else:
        raise RieszError("could not bracket the normalization level; field not coercive?")

    level = brentq(lambda L: mass(L) - 1.0, lo_level, hi_level, xtol=1e-12, rtol=1e-15)
    residual = abs(mass(level) - 1.0)
    if isinstance(field.domain, Box):
        support = field.domain
    else:
        support = field.confinement_box(level)
    return LimitMeasure(
        level=float(level), csd=csd, s=s, d=d, field=field,
        support_box=support, normalization_residual=float(residual),
    )


def beta_infinity_functional(density, field: FieldSpec, s: float, d: int, csd: float) -> float:
    """Zero-temperature macroscopic energy csd * int rho^(1+s/d) + int V rho.

    ``density`` is a LimitMeasure or an EmpiricalHistogram (then evaluated
    by midpoint sums over its bins).  The input must carry total mass one.
    """
    power = 1.0 + s / d
    if isinstance(density, LimitMeasure):
        if density.normalization_residual > 1e-6:
            raise RieszError("limit measure is not normalized")
        if d == 1:
            lo, hi = density.support_box.bounds[0]
            breaks = [
                b for b in _support_breakpoints(field, density.level, lo, hi) if lo < b < hi
            ]

            def integrand(x):
                rho = float(density.density([[x]])[0])
                return csd * rho**power + float(field.value([[x]])[0]) * rho

            val, _ = quad(integrand, lo, hi, points=breaks or None, limit=400,
                          epsabs=1e-10, epsrel=1e-10)
            return val
        box = density.support_box
        m = 256
        axes = [
            np.linspace(lo, hi, m + 1)[:-1] + 0.5 * (hi - lo) / m for lo, hi in box.bounds
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        rho = density.density(pts)
        cell = float(np.prod((box.bounds[:, 1] - box.bounds[:, 0]) / m))
        return float(np.sum(csd * rho**power + field.value(pts) * rho) * cell)

    if isinstance(density, EmpiricalHistogram):
        total = float(np.sum(density.masses))
        if abs(total - 1.0) > 1e-8:
            raise RieszError(f"histogram mass {total} is not one")
        vols = density.bin_volumes()
        rho = density.masses / vols
        mids = density.midpoints()
        grids = np.meshgrid(*mids, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        v = field.value(pts).reshape(density.masses.shape)
        return float(np.sum(csd * rho**power * vols + v * density.masses))

    raise RieszError("density must be a LimitMeasure or an EmpiricalHistogram")


# ---------------------------------------------------------------------------
# CSV emission


def histogram_to_csv(hist: EmpiricalHistogram) -> str:
    if hist.d != 1:
        raise RieszError("CSV emission is 1-D only")
    lines = [f"# bins={hist.masses.size}, samples={hist.sample_count}"]
    lines.append("lo,hi,mass")
    e = hist.edges[0]
    for i, m in enumerate(hist.masses):
        lines.append(f"{e[i]:.17g},{e[i + 1]:.17g},{m:.17g}")
    return "\n".join(lines) + "\n"


def correlation_to_csv(corr: CorrelationEstimate) -> str:
    if corr.d != 1:
        raise RieszError("CSV emission is 1-D only")
    lines = [
        f"# bins={corr.values.size}, R={corr.window_side:.17g}, samples={corr.sample_count}"
    ]
    lines.append("lo,hi,pair_density")
    e = corr.edges[0]
    for i, v in enumerate(corr.values):
        lines.append(f"{e[i]:.17g},{e[i + 1]:.17g},{v:.17g}")
    return "\n".join(lines) + "\n"


def limit_measure_to_csv(measure: LimitMeasure, grid) -> str:
    grid = np.asarray(grid, dtype=float).reshape(-1)
    rho = measure.density(grid.reshape(-1, 1))
    lines = [f"# level={measure.level:.17g}, csd={measure.csd:.17g}, points={grid.size}"]
    lines.append("x,rho")
    for x, r in zip(grid, rho):
        lines.append(f"{x:.17g},{r:.17g}")
    return "\n".join(lines) + "\n"
