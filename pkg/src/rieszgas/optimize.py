"""Energy minimization (confined and periodic) and the asymptotic constant.

The work-horse is a monotone projected-gradient descent with
Barzilai-Borwein step seeding and Armijo backtracking: accepted steps
never increase the energy, boxes project by coordinate clamping, and
infeasible or singular trial points simply force the line search to
halve its step (they raise typed errors, caught here).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .energy import RieszParams, gradient, total_energy
from .errors import DomainError, LatticeError, RieszError, SingularEnergyError
from .fields import Box, FieldSpec, Region, ZeroField
from .lattice import (
    BravaisLattice,
    epstein_zeta,
    hurwitz_batch,
    hurwitz_grad_batch,
    periodic_energy,
)
from .points import PointConfiguration
from .rng import split_rng

_ARMIJO = 1e-4
_MIN_STEP = 1e-14


@dataclass(frozen=True)
class MinimizeReport:
    """Best local minimum over all restarts."""

    best_config: PointConfiguration
    best_energy: float
    restarts_used: int
    gradient_norm: float
    iterations: int
    restart_energies: tuple = field(default=())

    @property
    def restarts_disagree(self) -> bool:
        """True when restarts landed on minima differing by > 1e-6 relative."""
        if len(self.restart_energies) < 2:
            return False
        lo, hi = min(self.restart_energies), max(self.restart_energies)
        return (hi - lo) > 1e-6 * max(1.0, abs(lo))


def _spg_minimize(value_fn, grad_fn, project_fn, x0, gtol, max_iter):
    """Monotone spectral projected gradient.  Returns (x, f, iterations, pg_norm)."""

    def safe_value(x):
        try:
            return value_fn(x)
        except (SingularEnergyError, DomainError, LatticeError):
            return math.inf

    x = project_fn(np.array(x0, dtype=float))
    f = value_fn(x)
    g = grad_fn(x)
    alpha = 1.0 / max(float(np.max(np.abs(g))), 1e-12)
    pg_norm = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        pg = x - project_fn(x - g)
        pg_norm = float(np.max(np.abs(pg)))
        if pg_norm <= gtol:
            break
        direction = project_fn(x - alpha * g) - x
        gd = float(np.vdot(g, direction))
        if gd >= 0.0:
            alpha = 1.0 / max(float(np.max(np.abs(g))), 1e-12)
            direction = project_fn(x - alpha * g) - x
            gd = float(np.vdot(g, direction))
            if gd >= 0.0:
                break
        lam = 1.0
        while True:
            x_new = x + lam * direction
            f_new = safe_value(x_new)
            if f_new <= f + _ARMIJO * lam * gd:
                break
            lam *= 0.5
            if lam < _MIN_STEP:
                x_new, f_new = x, f
                break
        if x_new is x:
            break
        g_new = grad_fn(x_new)
        step = x_new - x
        yvec = g_new - g
        sy = float(np.vdot(step, yvec))
        if sy > 0.0:
            alpha = min(max(float(np.vdot(step, step)) / sy, 1e-14), 1e10)
        else:
            alpha *= 2.0
        x, f, g = x_new, f_new, g_new
    return x, f, it, pg_norm


def stratified_jitter(box: Box, n: int, rng, region: Region | None = None,
                      max_tries: int = 1000) -> np.ndarray:
    """One uniform point per cell of an n-cell partition of the box.

    Avoids the near-coincident starts that stall line searches.  For
    predicate regions, each cell point is re-drawn until feasible.
    """
    d = box.d
    lo, hi = box.bounds[:, 0], box.bounds[:, 1]
    m = max(1, math.ceil(n ** (1.0 / d)))
    width = (hi - lo) / m
    chosen = rng.choice(m**d, size=n, replace=False)
    cells = np.stack(np.unravel_index(chosen, (m,) * d), axis=1)
    pts = np.empty((n, d))
    for i in range(n):
        for _ in range(max_tries):
            p = lo + (cells[i] + rng.random(d)) * width
            if region is None or region.contains(p)[0]:
                pts[i] = p
                break
        else:
            raise RieszError("could not find a feasible distinct-point start")
    return pts


def _lexicographic_key(x: np.ndarray):
    return tuple(np.asarray(x, dtype=float).ravel())


def _run_restarts(one_restart, restarts, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one_restart, range(restarts)))
    return [one_restart(r) for r in range(restarts)]


def minimize_confined(
    field_spec: FieldSpec,
    params: RieszParams,
    restarts: int = 8,
    seed: int = 0,
    max_iter: int = 100_000,
    threads: int = 1,
) -> MinimizeReport:
    """Best local minimum of the confined energy over seeded restarts.

    Stops each descent when the projected-gradient sup-norm falls below
    1e-8 * N^(s/d) or after ``max_iter`` iterations.
    """
    n, d = params.N, params.d
    if field_spec.d != d:
        raise RieszError("field dimension does not match params")
    gtol = 1e-8 * params.n_pow_sd
    domain = field_spec.domain
    region = domain if isinstance(domain, Region) else None
    init_box = domain if isinstance(domain, Box) else field_spec.confinement_box(
        _init_level(field_spec, params)
    )
    if isinstance(init_box, Region):
        init_box = init_box.bbox

    if isinstance(domain, Box):
        lo = np.broadcast_to(domain.bounds[:, 0], (n, d))
        hi = np.broadcast_to(domain.bounds[:, 1], (n, d))

        def project(x):
            return np.clip(x.reshape(n, d), lo, hi).reshape(-1)

    else:

        def project(x):
            return x

    def value(x):
        return total_energy(PointConfiguration(x.reshape(n, d)), field_spec, params)

    def grad(x):
        return gradient(PointConfiguration(x.reshape(n, d)), field_spec, params).ravel()

    def one_restart(r):
        rng = split_rng(seed, "minimize", r)
        for _ in range(100):
            x0 = stratified_jitter(init_box, n, rng, region).ravel()
            try:
                value(x0)
                break
            except (SingularEnergyError, DomainError):
                continue
        else:
            raise RieszError("could not find a feasible distinct-point start")
        x, f, it, pg = _spg_minimize(value, grad, project, x0, gtol, max_iter)
        return f, x, it, pg

    results = _run_restarts(one_restart, restarts, threads)
    best = min(results, key=lambda t: (t[0], _lexicographic_key(t[1])))
    f, x, it, pg = best
    config = PointConfiguration(x.reshape(n, d), domain_tag=field_spec)
    return MinimizeReport(
        best_config=config,
        best_energy=total_energy(config, field_spec, params),
        restarts_used=restarts,
        gradient_norm=pg,
        iterations=it,
        restart_energies=tuple(r[0] for r in results),
    )


def _init_level(field_spec: FieldSpec, params: RieszParams) -> float:
    center = np.zeros(params.d)
    base = float(field_spec.value(center)[0])
    spread = 4.0 * max(1.0, 1.0 / max(params.beta, 0.25))
    return base + spread


def minimize_periodic(
    lattice: BravaisLattice,
    s: float,
    N: int,
    restarts: int = 8,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    threads: int = 1,
) -> MinimizeReport:
    """Minimize the lattice-periodic energy of N points per fundamental domain.

    Coordinates evolve unconstrained (the energy is lattice-periodic) and
    are wrapped into the fundamental domain at the end.  Gradients use the
    term-wise derivative of the Hurwitz lattice sum, certified to the
    same per-pair tolerance as the energy.
    """
    if N < 1:
        raise RieszError("N must be >= 1")
    d = lattice.d
    tol_each = tol / N**2
    zeta0 = N * epstein_zeta(lattice, s, tol_each).value
    if N == 1:
        config = PointConfiguration(np.zeros((1, d)))
        return MinimizeReport(config, zeta0, restarts, 0.0, 0, (zeta0,))
    iu, ju = np.triu_indices(N, k=1)
    gtol = 1e-8 * float(N) ** (s / d)

    def value(x):
        pts = x.reshape(N, d)
        vals, _ = hurwitz_batch(lattice, s, pts[iu] - pts[ju], tol_each)
        return zeta0 + 2.0 * float(np.sum(vals))

    def grad(x):
        pts = x.reshape(N, d)
        grads, _ = hurwitz_grad_batch(lattice, s, pts[iu] - pts[ju], tol_each)
        g = np.zeros((N, d))
        np.add.at(g, iu, 2.0 * grads)
        np.add.at(g, ju, -2.0 * grads)
        return g.ravel()

    unit_cell = Box(np.array([[-0.5, 0.5]] * d))

    def one_restart(r):
        rng = split_rng(seed, "periodic", r)
        for _ in range(100):
            frac = stratified_jitter(unit_cell, N, rng)
            x0 = (frac @ lattice.generator.T).ravel()
            try:
                value(x0)
                break
            except LatticeError:
                continue
        else:
            raise RieszError("could not find a feasible distinct-point start")
        x, f, it, pg = _spg_minimize(value, grad, lambda z: z, x0, gtol, max_iter)
        return f, x, it, pg

    results = _run_restarts(one_restart, restarts, threads)
    best = min(results, key=lambda t: (t[0], _lexicographic_key(t[1])))
    f, x, it, pg = best
    wrapped = lattice.reduce(x.reshape(N, d))
    config = PointConfiguration(wrapped)
    return MinimizeReport(
        best_config=config,
        best_energy=periodic_energy(lattice, config, s, tol),
        restarts_used=restarts,
        gradient_norm=pg,
        iterations=it,
        restart_energies=tuple(r[0] for r in results),
    )


class CsdError(RieszError):
    """Optimizer failure during the asymptotic-constant sweep.

    Carries the rows completed so far as ``partial_table``.
    """

    def __init__(self, message, partial_table):
        self.partial_table = partial_table
        super().__init__(message)


@dataclass(frozen=True)
class CsdEstimate:
    """Per-N minimal-energy ratios and their extrapolated N -> infinity limit."""

    s: float
    d: int
    mode: str
    table: tuple          # rows (N, ratio, energy)
    extrapolated: float

    @property
    def ratios(self):
        return [row[1] for row in self.table]


def estimate_csd(
    s: float,
    d: int,
    N_list,
    mode: str = "confined-cube",
    restarts: int = 4,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    threads: int = 1,
) -> CsdEstimate:
    """Minimal-energy ratio E_min / N^(1+s/d) per N, plus extrapolation.

    ``mode`` is either "confined-cube" (zero field on the unit cube) or
    "periodic-unit-lattice" (Z^d periodic energy).  The extrapolation
    fits a + b * N^(-1/d) over the largest half of N_list; the raw table
    is always part of the result so callers can refit.
    """
    N_list = sorted(int(n) for n in N_list)
    if not N_list or any(n < 1 for n in N_list):
        raise RieszError("N_list must be a nonempty list of positive integers")
    if list(N_list) != sorted(set(N_list)):
        raise RieszError("N_list must be strictly increasing")
    if mode not in ("confined-cube", "periodic-unit-lattice"):
        raise RieszError(f"unknown csd mode {mode!r}")

    rows = []
    for N in N_list:
        try:
            if mode == "confined-cube":
                field_spec = FieldSpec(Box(np.array([[0.0, 1.0]] * d)), ZeroField())
                params = RieszParams(d=d, s=s, beta=0.0, N=N)
                report = minimize_confined(
                    field_spec, params, restarts=restarts, seed=seed,
                    max_iter=max_iter, threads=threads,
                )
            else:
                lattice = BravaisLattice(np.eye(d))
                report = minimize_periodic(
                    lattice, s, N, restarts=restarts, seed=seed, tol=tol,
                    max_iter=max_iter, threads=threads,
                )
        except RieszError as exc:
            raise CsdError(f"optimizer failed at N={N}: {exc}", tuple(rows)) from exc
        energy = report.best_energy
        rows.append((N, energy / float(N) ** (1.0 + s / d), energy))

    half = rows[-max(1, math.ceil(len(rows) / 2)):]
    if len(half) == 1:
        a = half[0][1]
    else:
        xs = np.array([row[0] ** (-1.0 / d) for row in half])
        ys = np.array([row[1] for row in half])
        slope, intercept = np.polyfit(xs, ys, 1)
        a = float(intercept)
    return CsdEstimate(s=s, d=d, mode=mode, table=tuple(rows), extrapolated=a)
