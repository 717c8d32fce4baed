"""Experiment driver: config parsing, subcommand dispatch, artifacts.

Config files are flat ``key = value`` text with ``[section]`` headers,
``#`` comments, and matrix values written as semicolon-separated rows
(``bounds = 0 1; 0 1``).  Parsing validates everything it can and reports
*all* problems at once, each with its line number.

Every run writes its outputs plus one ``manifest.json`` (full config
echo, seed, versions, wall time) into the output directory; feeding the
manifest back as ``--config`` reproduces the run.  All file writes are
atomic (write to a temp name, then rename).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .energy import RieszParams
from .errors import ConfigError, RieszError
from .fields import AxisPolynomial, Box, FieldSpec, FullSpace, Quadratic, Tabulated, ZeroField
from .lattice import BravaisLattice, epstein_hurwitz_zeta, epstein_zeta, lattice_preset, lattice_ws
from .optimize import estimate_csd, minimize_confined, minimize_periodic
from .points import PointConfiguration, points_to_csv
from .sampler import ChainSpec, run_chain, write_archive, read_archive
from .stats import (
    correlation_to_csv,
    limit_measure_to_csv,
    nn_spacing_stats,
    separation_bins,
    solve_limit_measure,
    two_point_correlation,
    ws_from_correlation,
)

log = logging.getLogger("rieszgas")

MODES = ("minimize", "sample", "zeta", "csd", "limit-measure", "correlate", "crystal-check")


@dataclass
class ExperimentConfig:
    mode: str
    seed: int
    out: str
    threads: int
    params: RieszParams | None
    field: FieldSpec | None
    lattice: BravaisLattice | None
    options: dict = dc_field(default_factory=dict)
    text: str = ""


# ---------------------------------------------------------------------------
# parsing


def _parse_float(v):
    return float(v)


def _parse_int(v):
    f = float(v)
    if f != int(f):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(f)


def _parse_bool(v):
    low = v.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _parse_matrix(v):
    rows = [r.strip() for r in v.split(";") if r.strip()]
    out = [[float(tok) for tok in r.replace(",", " ").split()] for r in rows]
    width = {len(r) for r in out}
    if len(width) != 1:
        raise ValueError("matrix rows have unequal lengths")
    return np.array(out)


def _parse_vector(v):
    return np.array([float(tok) for tok in v.replace(",", " ").split()])


def _parse_int_list(v):
    return [_parse_int(tok) for tok in v.replace(",", " ").split()]


def _parse_str(v):
    return v.strip()


_KNOWN_KEYS = {
    "mode": _parse_str,
    "seed": _parse_int,
    "out": _parse_str,
    "threads": _parse_int,
    "params.d": _parse_int,
    "params.s": _parse_float,
    "params.beta": _parse_float,
    "params.n": _parse_int,
    "field.potential": _parse_str,
    "field.coefficient": _parse_float,
    "field.coeffs": _parse_matrix,
    "field.grid": _parse_vector,
    "field.values": _parse_vector,
    "field.domain": _parse_str,
    "field.bounds": _parse_matrix,
    "lattice.preset": _parse_str,
    "lattice.matrix": _parse_matrix,
    "minimize.restarts": _parse_int,
    "minimize.max_iter": _parse_int,
    "sample.steps": _parse_int,
    "sample.burn_in": _parse_int,
    "sample.thinning": _parse_int,
    "sample.proposal_scale": _parse_float,
    "sample.adapt": _parse_bool,
    "sample.target_rate": _parse_float,
    "zeta.tol": _parse_float,
    "zeta.x": _parse_vector,
    "csd.n_list": _parse_int_list,
    "csd.mode": _parse_str,
    "csd.restarts": _parse_int,
    "csd.tol": _parse_float,
    "csd.max_iter": _parse_int,
    "limit_measure.csd": _parse_str,
    "limit_measure.grid_lo": _parse_float,
    "limit_measure.grid_hi": _parse_float,
    "limit_measure.grid_points": _parse_int,
    "correlate.archive": _parse_str,
    "correlate.window": _parse_float,
    "correlate.bin_width": _parse_float,
    "crystal_check.restarts": _parse_int,
    "crystal_check.max_iter": _parse_int,
}

_REQUIRED = {
    "minimize": ("params.d", "params.s", "params.n", "field.domain"),
    "sample": ("params.d", "params.s", "params.beta", "params.n", "field.domain",
               "sample.steps", "sample.burn_in"),
    "zeta": ("params.s",),
    "csd": ("params.d", "params.s", "csd.n_list"),
    "limit-measure": ("params.d", "params.s", "field.domain", "limit_measure.csd"),
    "correlate": ("params.s", "correlate.archive", "correlate.window",
                  "correlate.bin_width"),
    "crystal-check": ("params.d", "params.s", "params.n", "field.domain"),
}


def _build_field(kv, errors):
    domain_kind = kv.get("field.domain")
    if domain_kind == "box":
        if "field.bounds" not in kv:
            errors.append((None, "domain 'box' requires field.bounds"))
            return None
        try:
            domain = Box(kv["field.bounds"])
        except RieszError as exc:
            errors.append((None, str(exc)))
            return None
    elif domain_kind == "all":
        d = kv.get("params.d")
        if d is None:
            errors.append((None, "domain 'all' requires params.d"))
            return None
        domain = FullSpace(d)
    else:
        errors.append((None, f"unknown domain {domain_kind!r} (use box|all)"))
        return None

    kind = kv.get("field.potential", "zero")
    try:
        if kind == "zero":
            pot = ZeroField()
        elif kind == "quadratic":
            pot = Quadratic(kv.get("field.coefficient", 1.0))
        elif kind == "poly":
            if "field.coeffs" not in kv:
                errors.append((None, "potential 'poly' requires field.coeffs"))
                return None
            pot = AxisPolynomial(kv["field.coeffs"])
        elif kind == "tabulated":
            if "field.grid" not in kv or "field.values" not in kv:
                errors.append((None, "potential 'tabulated' requires field.grid and field.values"))
                return None
            pot = Tabulated(kv["field.grid"], kv["field.values"])
        else:
            errors.append((None, f"unknown potential {kind!r}"))
            return None
        return FieldSpec(domain, pot)
    except RieszError as exc:
        errors.append((None, str(exc)))
        return None


def parse_config(text: str, default_mode: str | None = None) -> ExperimentConfig:
    """Parse and validate config text; raise ConfigError listing every problem."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        # a run manifest; re-parse its embedded config with the effective seed
        manifest = json.loads(text)
        cfg = parse_config(manifest["config_text"], default_mode)
        cfg.seed = int(manifest.get("seed", cfg.seed))
        return cfg

    errors: list = []
    kv: dict = {}
    lines_of: dict = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().replace("-", "_")
            continue
        if "=" not in line:
            errors.append((lineno, f"expected 'key = value', got {line!r}"))
            continue
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        full = f"{section}.{key}" if section else key
        if full not in _KNOWN_KEYS:
            errors.append((lineno, f"unknown key '{full}'"))
            continue
        if full in kv:
            errors.append((lineno, f"duplicate key '{full}' (first set on line {lines_of[full]})"))
            continue
        try:
            kv[full] = _KNOWN_KEYS[full](value)
            lines_of[full] = lineno
        except ValueError as exc:
            errors.append((lineno, f"bad value for '{full}': {exc}"))

    mode = kv.get("mode", default_mode)
    if mode is None:
        errors.append((None, "missing key 'mode'"))
    elif mode not in MODES:
        errors.append((lines_of.get("mode"), f"unknown mode {mode!r}"))
        mode = None

    if mode:
        for req in _REQUIRED[mode]:
            if req not in kv:
                errors.append((None, f"mode '{mode}' requires key '{req}'"))

    lattice = None
    if "lattice.matrix" in kv:
        try:
            lattice = BravaisLattice(kv["lattice.matrix"])
        except RieszError as exc:
            errors.append((lines_of.get("lattice.matrix"), f"malformed matrix: {exc}"))
    elif "lattice.preset" in kv:
        try:
            lattice = lattice_preset(kv["lattice.preset"])
        except RieszError as exc:
            errors.append((lines_of.get("lattice.preset"), str(exc)))
    elif mode == "zeta":
        errors.append((None, "mode 'zeta' requires lattice.preset or lattice.matrix"))

    s = kv.get("params.s")
    d = kv.get("params.d")
    if d is None and lattice is not None:
        d = lattice.d
    if s is not None and d is not None and not s > d:
        errors.append((lines_of.get("params.s"), "hypersingular requires s>d"))

    if mode == "sample" and "sample.steps" in kv and "sample.burn_in" in kv:
        if kv["sample.steps"] <= kv["sample.burn_in"]:
            errors.append((lines_of.get("sample.steps"),
                           "sample.steps must exceed sample.burn_in"))

    field_spec = None
    if mode in ("minimize", "sample", "limit-measure", "crystal-check") and "field.domain" in kv:
        field_spec = _build_field(kv, errors)

    params = None
    if s is not None and d is not None and s > d:
        try:
            params = RieszParams(
                d=d, s=s, beta=kv.get("params.beta", 0.0), N=kv.get("params.n", 1)
            )
        except RieszError as exc:
            errors.append((None, str(exc)))

    if mode == "crystal-check" and d is not None and d != 1:
        errors.append((None, "crystal-check requires d = 1"))

    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        mode=mode,
        seed=kv.get("seed", 0),
        out=kv.get("out", "."),
        threads=kv.get("threads", 1),
        params=params,
        field=field_spec,
        lattice=lattice,
        options=kv,
        text=text,
    )


# ---------------------------------------------------------------------------
# artifacts


def _atomic_write(path: str, data: str | bytes) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _report_to_dict(report, params: RieszParams) -> dict:
    return {
        "params": {"d": params.d, "s": params.s, "beta": params.beta, "N": params.N},
        "restart_energies": list(report.restart_energies),
        "restarts_disagree": report.restarts_disagree,
        "best_energy": report.best_energy,
        "gradient_norm": report.gradient_norm,
        "iterations": report.iterations,
        "best_config_csv": points_to_csv(report.best_config),
    }


def run_experiment(config: ExperimentConfig) -> int:
    """Dispatch one experiment; write artifacts plus a run manifest.

    Returns the process exit status.  Failures leave a machine-readable
    ``error.json`` next to the manifest.
    """
    t0 = time.monotonic()
    os.makedirs(config.out, exist_ok=True)
    artifacts: list = []
    try:
        _dispatch(config, artifacts)
    except Exception as exc:  # noqa: BLE001 - converted to an artifact + status
        log.error("experiment failed: %s", exc)
        _atomic_write(
            os.path.join(config.out, "error.json"),
            _json_dumps({"error": type(exc).__name__, "message": str(exc)}),
        )
        return 1
    manifest = {
        "mode": config.mode,
        "seed": config.seed,
        "config_text": config.text,
        "artifacts": artifacts,
        "versions": {
            "rieszgas": __version__,
            "numpy": np.__version__,
        },
        "wall_time_s": time.monotonic() - t0,
    }
    _atomic_write(os.path.join(config.out, "manifest.json"), _json_dumps(manifest))
    return 0


def _out(config, name, data, artifacts):
    _atomic_write(os.path.join(config.out, name), data)
    artifacts.append(name)


def _dispatch(config: ExperimentConfig, artifacts: list) -> None:
    opts = config.options
    mode = config.mode
    if mode == "minimize":
        if config.lattice is not None:
            report = minimize_periodic(
                config.lattice, config.params.s, config.params.N,
                restarts=opts.get("minimize.restarts", 8), seed=config.seed,
                max_iter=opts.get("minimize.max_iter", 100_000), threads=config.threads,
            )
        else:
            report = minimize_confined(
                config.field, config.params,
                restarts=opts.get("minimize.restarts", 8), seed=config.seed,
                max_iter=opts.get("minimize.max_iter", 100_000), threads=config.threads,
            )
        _out(config, "minimize.json", _json_dumps(_report_to_dict(report, config.params)),
             artifacts)
        _out(config, "minimizer.csv", points_to_csv(report.best_config), artifacts)
        print(f"minimize energy={report.best_energy:.12g} "
              f"gradient_norm={report.gradient_norm:.3g}")

    elif mode == "sample":
        spec = ChainSpec(
            params=config.params,
            field=config.field,
            steps=opts["sample.steps"],
            burn_in=opts["sample.burn_in"],
            thinning=opts.get("sample.thinning", 1),
            proposal_scale=opts.get("sample.proposal_scale", 0.1),
            seed=config.seed,
            adapt=opts.get("sample.adapt", True),
            target_rate=opts.get("sample.target_rate", 0.3),
        )
        archive = run_chain(spec)
        write_archive(archive, os.path.join(config.out, "archive.gz"))
        artifacts.append("archive.gz")
        _out(config, "sample.json", _json_dumps({
            "snapshots": len(archive),
            "acceptance_rate": archive.acceptance_rate,
        }), artifacts)
        print(f"sample snapshots={len(archive)} acceptance={archive.acceptance_rate:.3f}")

    elif mode == "zeta":
        s = opts["params.s"]
        tol = opts.get("zeta.tol", 1e-8)
        if "zeta.x" in opts:
            res = epstein_hurwitz_zeta(config.lattice, s, opts["zeta.x"], tol)
            label = "hurwitz"
        else:
            res = epstein_zeta(config.lattice, s, tol)
            label = "zeta"
        payload = {
            "kind": label, "s": s, "value": res.value,
            "tail_bound": res.tail_bound, "shells_used": res.shells_used,
            "lattice_ws": lattice_ws(config.lattice, s, tol),
        }
        _out(config, "zeta.json", _json_dumps(payload), artifacts)
        print(f"zeta {res.value:.10f}")

    elif mode == "csd":
        est = estimate_csd(
            opts["params.s"], opts["params.d"], opts["csd.n_list"],
            mode=opts.get("csd.mode", "confined-cube"),
            restarts=opts.get("csd.restarts", 4), seed=config.seed,
            tol=opts.get("csd.tol", 1e-8),
            max_iter=opts.get("csd.max_iter", 100_000), threads=config.threads,
        )
        payload = {
            "s": est.s, "d": est.d, "mode": est.mode,
            "table": [list(row) for row in est.table],
            "extrapolated": est.extrapolated,
        }
        if est.d == 2:
            # conjectured reference value, reported alongside, never asserted
            payload["hexagonal_zeta_reference"] = lattice_ws(
                lattice_preset("hexagonal"), est.s, opts.get("csd.tol", 1e-6)
            )
        _out(config, "csd.json", _json_dumps(payload), artifacts)
        print(f"csd {est.extrapolated:.8f}")

    elif mode == "limit-measure":
        s, d = opts["params.s"], opts["params.d"]
        csd_raw = opts["limit_measure.csd"]
        if csd_raw == "auto":
            if d != 1:
                raise RieszError("csd 'auto' (2 zeta(s)) is only defined for d = 1")
            csd = epstein_zeta(lattice_preset("Z1"), s, 1e-12).value
        else:
            csd = float(csd_raw)
        measure = solve_limit_measure(config.field, s, d, csd)
        lo = opts.get("limit_measure.grid_lo", measure.support_box.bounds[0, 0])
        hi = opts.get("limit_measure.grid_hi", measure.support_box.bounds[0, 1])
        npts = opts.get("limit_measure.grid_points", 1000)
        grid = np.linspace(lo, hi, npts)
        _out(config, "density.csv", limit_measure_to_csv(measure, grid), artifacts)
        _out(config, "limit_measure.json", _json_dumps({
            "level": measure.level, "csd": csd,
            "normalization_residual": measure.normalization_residual,
        }), artifacts)
        print(f"limit-measure L={measure.level:.9f}")

    elif mode == "correlate":
        s = opts["params.s"]
        archive = read_archive(opts["correlate.archive"])
        window = opts["correlate.window"]
        width = opts["correlate.bin_width"]
        if archive.positions.shape[2] != 1:
            raise RieszError("correlate artifacts are implemented for d = 1 archives")
        corr = two_point_correlation(archive, window, separation_bins(window, width))
        ws = ws_from_correlation(corr, s)
        _out(config, "correlation.csv", correlation_to_csv(corr), artifacts)
        _out(config, "correlate.json", _json_dumps({
            "window": window, "bin_width": width, "ws_estimate": ws,
        }), artifacts)
        print(f"correlate ws={ws:.8f}")

    elif mode == "crystal-check":
        report = minimize_confined(
            config.field, config.params,
            restarts=opts.get("crystal_check.restarts", 4), seed=config.seed,
            max_iter=opts.get("crystal_check.max_iter", 100_000), threads=config.threads,
        )
        mean, cv, gaps = nn_spacing_stats(report.best_config)
        lines = ["# central-half nearest-neighbor gaps", "gap"]
        lines += [f"{g:.17g}" for g in gaps]
        _out(config, "gaps.csv", "\n".join(lines) + "\n", artifacts)
        _out(config, "crystal.json", _json_dumps({
            "mean_gap": mean, "cv": cv, "energy": report.best_energy,
        }), artifacts)
        print(f"crystal-check cv={cv:.6f} mean_gap={mean:.8g}")

    else:
        raise RieszError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    level = os.environ.get("RIESZ_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = argparse.ArgumentParser(
        prog="riesz",
        description="Riesz-gas simulation and optimization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in MODES:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--threads", type=int, default=None, help="worker threads")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
        config = parse_config(text, default_mode=args.command)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for ln, msg in exc.errors:
            where = f"line {ln}: " if ln else ""
            print(f"config error: {where}{msg}", file=sys.stderr)
        return 2

    if config.mode != args.command:
        print(
            f"error: config declares mode '{config.mode}' but subcommand is "
            f"'{args.command}'",
            file=sys.stderr,
        )
        return 2
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.threads is not None:
        config.threads = args.threads
    return run_experiment(config)


if __name__ == "__main__":
    sys.exit(main())
