"""Metropolis sampling of the canonical Gibbs measure.

The target has log-density -beta * N^(-s/d) * H_N on Omega^N (up to the
normalizing constant).  The kernel is single-site: pick a uniform index,
propose a Gaussian displacement, accept with the Metropolis rule; the
energy change of a one-point move costs O(N), which s > d locality is
what makes affordable.  Proposals leaving Omega are rejected outright,
which is exactly the domain indicator in the target.

Reproducibility contract: the same ChainSpec (seed included) produces a
bit-identical archive.  Randomness is consumed in a fixed order that does
not depend on acceptance history.
"""

from __future__ import annotations

import gzip
import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .energy import RieszParams, total_energy
from .errors import DomainError, RieszError, SingularEnergyError
from .fields import Box, FieldSpec, FullSpace, ZeroField
from .points import PointConfiguration, points_from_csv, points_to_csv
from .rng import split_rng

_REFRESH_EVERY = 10_000  # accepted moves between full energy recomputations
_ADAPT_WINDOW = 100      # steps per Robbins-Monro acceptance window


@dataclass(frozen=True)
class ChainSpec:
    """Everything needed to reproduce one chain."""

    params: RieszParams
    field: FieldSpec
    steps: int
    burn_in: int = 0
    thinning: int = 1
    proposal_scale: float = 0.1
    seed: int = 0
    adapt: bool = True
    target_rate: float = 0.3

    def __post_init__(self):
        if not (self.steps > self.burn_in >= 0):
            raise RieszError(
                f"need steps > burn_in >= 0, got steps={self.steps}, burn_in={self.burn_in}"
            )
        if self.thinning < 1:
            raise RieszError(f"thinning must be >= 1, got {self.thinning}")
        if not self.proposal_scale > 0:
            raise RieszError(f"proposal_scale must be positive, got {self.proposal_scale}")
        if not 0.0 < self.target_rate < 1.0:
            raise RieszError(f"target_rate must be in (0, 1), got {self.target_rate}")
        if self.params.d != self.field.d:
            raise RieszError("params dimension does not match the field")
        if self.params.beta == 0.0 and not self.field.domain.bounded:
            raise RieszError("beta = 0 on an unbounded domain has no normalizable target")

    def to_dict(self) -> dict:
        return {
            "params": {
                "d": self.params.d, "s": self.params.s,
                "beta": self.params.beta, "N": self.params.N,
            },
            "field": self.field.to_dict(),
            "steps": self.steps, "burn_in": self.burn_in, "thinning": self.thinning,
            "proposal_scale": self.proposal_scale, "seed": self.seed,
            "adapt": self.adapt, "target_rate": self.target_rate,
        }

    @staticmethod
    def from_dict(data: dict) -> "ChainSpec":
        p = data["params"]
        return ChainSpec(
            params=RieszParams(d=int(p["d"]), s=float(p["s"]),
                               beta=float(p["beta"]), N=int(p["N"])),
            field=FieldSpec.from_dict(data["field"]),
            steps=int(data["steps"]), burn_in=int(data["burn_in"]),
            thinning=int(data["thinning"]),
            proposal_scale=float(data["proposal_scale"]), seed=int(data["seed"]),
            adapt=bool(data["adapt"]), target_rate=float(data.get("target_rate", 0.3)),
        )


@dataclass(frozen=True)
class SampleArchive:
    """Thinned post-burn-in snapshots plus their energies.

    ``positions`` has shape (snapshots, N, d); ``energy_trace`` holds the
    total energy of each snapshot.
    """

    positions: np.ndarray
    energy_trace: np.ndarray
    acceptance_rate: float
    spec: ChainSpec

    def __len__(self) -> int:
        return self.positions.shape[0]

    def snapshot(self, i: int) -> PointConfiguration:
        return PointConfiguration(self.positions[i])

    def snapshots(self):
        for i in range(len(self)):
            yield self.snapshot(i)


def log_unnormalized_density(
    config: PointConfiguration, field: FieldSpec, params: RieszParams
) -> float:
    """-beta * N^(-s/d) * H_N(config); -inf outside the domain."""
    if not bool(np.all(field.contains(config.points))):
        return -math.inf
    h = total_energy(config, field, params)
    return -params.beta * float(params.N) ** (-params.s / params.d) * h


def _energy_raw(pos: np.ndarray, field: FieldSpec, params: RieszParams) -> float:
    if pos.shape[0] > 1:
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(dist, np.inf)
        pair = float(np.sum(dist**-params.s))
    else:
        pair = 0.0
    return pair + params.n_pow_sd * float(np.sum(field.value(pos)))


def _default_init(spec: ChainSpec) -> np.ndarray:
    # local imports: optimize/stats import this module at top level
    from .optimize import stratified_jitter

    field = spec.field
    d = spec.params.d
    if isinstance(field.domain, Box):
        box = field.domain
    else:
        box = None
        try:
            # seed inside the zero-temperature support: its level is computable
            # from the Z^d lattice sum (exact constant in d=1, upper proxy above)
            from .lattice import BravaisLattice, epstein_zeta
            from .stats import solve_limit_measure

            csd_proxy = epstein_zeta(BravaisLattice(np.eye(d)), spec.params.s, 1e-8).value
            measure = solve_limit_measure(field, spec.params.s, d, csd_proxy)
            box = field.confinement_box(measure.level)
        except RieszError:
            pass
        if box is None:
            level = float(field.value(np.zeros((1, d)))[0])
            level += 4.0 * max(1.0, 1.0 / max(spec.params.beta, 0.25))
            box = field.confinement_box(level)
    rng = split_rng(spec.seed, "chain-init")
    region = field.domain if not isinstance(field.domain, (Box, FullSpace)) else None
    return stratified_jitter(box, spec.params.N, rng, region)


def run_chain(spec: ChainSpec, init: PointConfiguration | None = None) -> SampleArchive:
    """Run the single-site Metropolis chain described by ``spec``."""
    pos, scale, acc_rate, snaps, energies = _metropolis(spec, init, record=True)
    return SampleArchive(
        positions=snaps, energy_trace=energies, acceptance_rate=acc_rate, spec=spec
    )


def tune_proposal(spec: ChainSpec, target_rate: float = 0.3) -> float:
    """Proposal scale after Robbins-Monro adaptation over the burn-in only."""
    if spec.burn_in == 0:
        return spec.proposal_scale
    probe = replace(spec, steps=spec.burn_in + 1, thinning=1,
                    adapt=True, target_rate=target_rate)
    _, scale, _, _, _ = _metropolis(probe, None, record=False)
    return scale


def _metropolis(spec: ChainSpec, init, record: bool):
    params = spec.params
    field = spec.field
    n, d = params.N, params.d
    s = params.s
    beta_eff = params.beta * float(n) ** (-s / d)
    n_pow_sd = params.n_pow_sd

    if init is not None:
        pos = np.array(init.points, dtype=float)
        if pos.shape != (n, d):
            raise RieszError(f"init has shape {pos.shape}, expected ({n}, {d})")
        if not bool(np.all(field.contains(pos))):
            raise DomainError("initial configuration leaves the domain")
        if n > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            np.fill_diagonal(dist, np.inf)
            if np.any(dist == 0.0):
                raise SingularEnergyError([], "initial configuration has coincident points")
    else:
        pos = _default_init(spec)

    domain = field.domain
    is_box = isinstance(domain, Box)
    if is_box:
        lo, hi = domain.bounds[:, 0], domain.bounds[:, 1]
    is_free = isinstance(domain, FullSpace)
    has_field = not isinstance(field.field, ZeroField)

    energy = _energy_raw(pos, field, params)
    scale = spec.proposal_scale
    log_scale = math.log(scale)
    rng = split_rng(spec.seed, "chain")

    n_keep = (spec.steps - spec.burn_in) // spec.thinning if record else 0
    snaps = np.empty((n_keep, n, d)) if record else None
    energies = np.empty(n_keep) if record else None
    kept = 0

    accepted_post = 0
    accepted_total = 0
    window_acc = 0
    window_idx = 0

    flat = d == 1
    work = pos[:, 0].copy() if flat else pos

    block = 8192
    step = 0
    while step < spec.steps:
        m = min(block, spec.steps - step)
        idxs = rng.integers(0, n, size=m)
        disps = rng.standard_normal(size=(m, d))
        logu = np.log(rng.random(size=m))
        for b in range(m):
            i = int(idxs[b])
            in_burn = step < spec.burn_in
            if flat:
                old = work[i]
                new = old + scale * disps[b, 0]
                if is_box:
                    ok = lo[0] <= new <= hi[0]
                elif is_free:
                    ok = True
                else:
                    ok = bool(domain.contains(np.array([[new]]))[0])
                if ok:
                    d_old = np.abs(work - old)
                    d_new = np.abs(work - new)
                    d_old[i] = np.inf
                    d_new[i] = np.inf
                    if np.any(d_new == 0.0):
                        ok = False
                    else:
                        delta = 2.0 * float(np.sum(d_new**-s) - np.sum(d_old**-s))
                        if has_field:
                            vals = field.field.value(np.array([[new], [old]]))
                            delta += n_pow_sd * float(vals[0] - vals[1])
                if ok and logu[b] < -beta_eff * delta:
                    work[i] = new
                    energy += delta
                    accepted_total += 1
                    if not in_burn:
                        accepted_post += 1
                    if accepted_total % _REFRESH_EVERY == 0:
                        pos_view = work.reshape(n, 1)
                        energy = _energy_raw(pos_view, field, params)
                    if in_burn:
                        window_acc += 1
            else:
                old = work[i].copy()
                new = old + scale * disps[b]
                if is_box:
                    ok = bool(np.all(new >= lo) and np.all(new <= hi))
                elif is_free:
                    ok = True
                else:
                    ok = bool(domain.contains(new.reshape(1, -1))[0])
                if ok:
                    d_old = np.sqrt(np.sum((work - old) ** 2, axis=1))
                    d_new = np.sqrt(np.sum((work - new) ** 2, axis=1))
                    d_old[i] = np.inf
                    d_new[i] = np.inf
                    if np.any(d_new == 0.0):
                        ok = False
                    else:
                        delta = 2.0 * float(np.sum(d_new**-s) - np.sum(d_old**-s))
                        if has_field:
                            vals = field.field.value(np.stack([new, old]))
                            delta += n_pow_sd * float(vals[0] - vals[1])
                if ok and logu[b] < -beta_eff * delta:
                    work[i] = new
                    energy += delta
                    accepted_total += 1
                    if not in_burn:
                        accepted_post += 1
                    if accepted_total % _REFRESH_EVERY == 0:
                        pos_view = work.reshape(n, d)
                        energy = _energy_raw(pos_view, field, params)
                    if in_burn:
                        window_acc += 1

            step += 1
            if in_burn and spec.adapt and step % _ADAPT_WINDOW == 0:
                window_idx += 1
                rate = window_acc / _ADAPT_WINDOW
                gain = 1.0 / window_idx**0.6
                log_scale += gain * (rate - spec.target_rate)
                log_scale = min(max(log_scale, -40.0), 40.0)
                scale = math.exp(log_scale)
                window_acc = 0
            if record and step > spec.burn_in:
                k = step - spec.burn_in
                if k % spec.thinning == 0 and kept < n_keep:
                    snaps[kept] = work.reshape(n, d)
                    energies[kept] = energy
                    kept += 1

    post_steps = spec.steps - spec.burn_in
    acc_rate = accepted_post / post_steps if post_steps else 0.0
    final = work.reshape(n, d).copy()
    return final, scale, acc_rate, snaps, energies


# ---------------------------------------------------------------------------
# archive files: one JSON header line, then CSV blocks separated by blank lines


def write_archive(archive: SampleArchive, path) -> None:
    header = {
        "spec": archive.spec.to_dict(),
        "acceptance_rate": archive.acceptance_rate,
        "energy_trace": [float(e) for e in archive.energy_trace],
    }
    buf = io.StringIO()
    buf.write(json.dumps(header, sort_keys=True))
    buf.write("\n")
    for i in range(len(archive)):
        buf.write("\n")
        buf.write(points_to_csv(archive.snapshot(i)))
    data = buf.getvalue().encode()
    path = str(path)
    if path.endswith(".gz"):
        with gzip.open(path, "wb") as fh:
            fh.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def read_archive(path, spot_check: float = 0.01) -> SampleArchive:
    """Load an archive, spot-checking the stored energies on a sample.

    A fraction ``spot_check`` of snapshots (at least one) is re-evaluated:
    domain membership is enforced and total_energy must match the stored
    trace to 1e-8 relative.
    """
    path = str(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as fh:
        text = fh.read().decode()
    head, _, body = text.partition("\n")
    header = json.loads(head)
    spec = ChainSpec.from_dict(header["spec"])
    blocks = [blk for blk in body.split("\n\n") if blk.strip()]
    configs = [points_from_csv(blk) for blk in blocks]
    n_snap = len(configs)
    positions = np.stack([c.points for c in configs]) if n_snap else np.empty(
        (0, spec.params.N, spec.params.d)
    )
    energies = np.asarray(header["energy_trace"], dtype=float)
    if energies.size != n_snap:
        raise RieszError(
            f"energy trace length {energies.size} does not match {n_snap} snapshots"
        )
    archive = SampleArchive(
        positions=positions,
        energy_trace=energies,
        acceptance_rate=float(header["acceptance_rate"]),
        spec=spec,
    )
    if n_snap:
        n_check = max(1, int(spot_check * n_snap))
        rng = split_rng(spec.seed, "spot-check")
        for i in rng.choice(n_snap, size=n_check, replace=False):
            cfg = archive.snapshot(int(i))
            spec.field.require_inside(cfg.points)
            h = total_energy(cfg, spec.field, spec.params)
            ref = energies[int(i)]
            if abs(h - ref) > 1e-8 * max(1.0, abs(ref)):
                raise RieszError(
                    f"snapshot {i}: stored energy {ref} != recomputed {h}"
                )
    return archive
