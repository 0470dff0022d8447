"""Command-line front end.

Every command reads a JSON run configuration::

    {"surface": "sphere",
     "curve": {"family": "polar", "c0": 0.8, "coeffs": [[0, 0], [0.05, 0]]},
     "resolution": 2048, "tolerances": {...}, "seed": 0}

and writes CSV or JSON to ``--out`` (default stdout). Exit codes: 0 success,
1 configuration error, 2 solver or domain error, 3 invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .billiard import (
    PhasePoint,
    chord_arrays,
    dt_from_chord,
    gen_hessian,
    iterate,
    next_impact,
    to_momentum,
    wrap_delta,
)
from .errors import BilliardError, DomainError, InvalidOvalError, UsageError
from .orbits import break_degeneracy, find_birkhoff, strip_bound, strip_check
from .oval import DEFAULT_RESOLUTION, Oval, OvalSpec, build_oval

log = logging.getLogger("ovalbilliards")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 1, 2, 3

DEFAULT_TOLERANCES = {
    "gen_first": 1e-6,
    "gen_second": 1e-5,
    "jacobian": 1e-5,
    "measure": 1e-8,
    "reversibility": 1e-8,
    "residue": 1e-6,
}

PSI_SAMPLE_MARGIN = 0.05


class ConfigError(UsageError):
    pass


@dataclass(frozen=True)
class RunConfig:
    spec: OvalSpec
    resolution: int = DEFAULT_RESOLUTION
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - {"surface", "curve", "resolution", "tolerances", "seed"}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            spec = OvalSpec.from_dict({"surface": data.get("surface"), "curve": data.get("curve")})
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"incomplete curve specification: {exc}") from exc
        resolution = data.get("resolution", DEFAULT_RESOLUTION)
        if not isinstance(resolution, int) or isinstance(resolution, bool) or resolution < 64:
            raise ConfigError(f"resolution must be an integer >= 64, got {resolution!r}")
        tol = dict(DEFAULT_TOLERANCES)
        given = data.get("tolerances", {}) or {}
        if not isinstance(given, dict):
            raise ConfigError("tolerances must be an object")
        bad = set(given) - set(tol)
        if bad:
            raise ConfigError(f"unknown tolerance keys: {sorted(bad)}")
        for k, v in given.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(f"tolerance {k} must be a positive number, got {v!r}")
            tol[k] = float(v)
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        return cls(spec, resolution, tol, seed)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def build(self) -> Oval:
        return build_oval(self.spec, resolution=self.resolution)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_writer(buf):
    return csv.writer(buf, lineterminator="\n")


# ---------------------------------------------------------------------------
# commands; each returns (text, exit code)


def cmd_simulate(cfg: RunConfig, s0: float, psi0: float, steps: int):
    oval = cfg.build()
    buf = io.StringIO()
    w = _csv_writer(buf)
    w.writerow(["i", "s", "psi", "p"])
    for i, x in enumerate(iterate(oval, PhasePoint(s0, psi0), steps)):
        w.writerow([i, _fmt(x.s), _fmt(x.psi), _fmt(to_momentum(x).p)])
    return buf.getvalue(), EXIT_OK


def cmd_portrait(cfg: RunConfig, grid_s: int, grid_psi: int, steps: int):
    if grid_s < 1 or grid_psi < 1:
        raise ConfigError("grid sizes must be >= 1")
    oval = cfg.build()
    l = oval.length
    buf = io.StringIO()
    w = _csv_writer(buf)
    w.writerow(["s0", "psi0", "i", "s", "psi"])
    for i in range(grid_s):
        s0 = l * i / grid_s
        for j in range(grid_psi):
            psi0 = math.pi * (j + 0.5) / grid_psi
            for k, x in enumerate(iterate(oval, PhasePoint(s0, psi0), steps)):
                w.writerow([_fmt(s0), _fmt(psi0), k, _fmt(x.s), _fmt(x.psi)])
    return buf.getvalue(), EXIT_OK


def cmd_find_orbits(cfg: RunConfig, m: int, n: int, seeds: int):
    oval = cfg.build()
    result = find_birkhoff(oval, m, n, seeds=seeds, seed=cfg.seed)
    bound = strip_bound(oval, n)
    tol = cfg.tolerances
    orbits = []
    for o in result:
        d = o.to_dict()
        d["strip_ok"] = strip_check(o, bound)
        d["residue_discrepancy"] = None if o.degenerate else o.residue_discrepancy
        d["notes"] = list(o.notes)
        orbits.append(d)
    report = {
        "surface": oval.kind.value,
        "m": m,
        "n": n,
        "seeds": seeds,
        "count": len(orbits),
        "family": result.family,
        "distinct_found": result.distinct_found,
        "strip_bound": {"delta": bound.delta, "m0": bound.m0, "area": bound.area},
        "all_strip_ok": all(o["strip_ok"] for o in orbits),
        "max_residue_discrepancy": max(
            [o["residue_discrepancy"] for o in orbits if o["residue_discrepancy"] is not None],
            default=None,
        ),
        "residue_tolerance": tol["residue"],
        "orbits": orbits,
        "diagnostics": {k: v for k, v in result.diagnostics.items()
                        if k not in ("slice_action", "slice_gradient")},
    }
    return _dump_json(report), EXIT_OK


def _sample_points(oval: Oval, rng, samples: int):
    l = oval.length
    s = rng.uniform(0.0, l, samples)
    psi = rng.uniform(PSI_SAMPLE_MARGIN, math.pi - PSI_SAMPLE_MARGIN, samples)
    return s, psi


def invariant_suite(oval: Oval, samples: int, tolerances: dict, seed: int = 0) -> dict:
    """Max residual of each map invariant over ``samples`` random points."""
    rng = np.random.default_rng(seed)
    l = oval.length
    s0 = rng.uniform(0.0, l, samples)
    s1 = s0 + rng.uniform(0.05 * l, 0.95 * l, samples)
    ch = chord_arrays(oval, s0, s1)
    fd0, fd1 = oracles.fd_gen_derivs(oval, s0, s1)
    first = float(np.max(np.abs(np.concatenate([-ch["cos0"] - fd0, ch["cos1"] - fd1]))))
    h00, h01, h11 = oracles.fd_gen_hessian(oval, s0, s1)
    second = 0.0
    for i in range(samples):
        H = gen_hessian(oval, s0[i], s1[i])
        second = max(second, abs(H.h00 - h00[i]), abs(H.h01 - h01[i]), abs(H.h11 - h11[i]))

    ps, pp = _sample_points(oval, rng, samples)
    jac = measure = rev = 0.0
    twist_min = math.inf
    for s, psi in zip(ps, pp):
        x = PhasePoint(float(s), float(psi))
        y = next_impact(oval, x)
        J = dt_from_chord(oval, x.s, y.s)
        F = oracles.fd_jacobian(oval, x)
        jac = max(jac, float(np.max(np.abs(J.matrix - F)) / max(np.max(np.abs(F)), 1e-300)))
        measure = max(measure, abs(J.det - math.sin(x.psi) / math.sin(y.psi)))
        z = next_impact(oval, y.flipped()).flipped()
        rev = max(rev, abs(float(wrap_delta(z.s - x.s, l))), abs(z.psi - x.psi))
        twist_min = min(twist_min, J.b)
    checks = {
        "gen_first": (first, tolerances["gen_first"]),
        "gen_second": (second, tolerances["gen_second"]),
        "jacobian": (jac, tolerances["jacobian"]),
        "measure": (measure, tolerances["measure"]),
        "reversibility": (rev, tolerances["reversibility"]),
    }
    out = {k: {"max_residual": v, "tolerance": t, "pass": bool(v < t)} for k, (v, t) in checks.items()}
    out["twist"] = {"min_ds1_dpsi0": twist_min, "pass": bool(twist_min > 0.0)}
    return out


def cmd_verify(cfg: RunConfig, samples: int):
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    oval = cfg.build()
    checks = invariant_suite(oval, samples, cfg.tolerances, seed=cfg.seed)
    ok = all(c["pass"] for c in checks.values())
    report = {"surface": oval.kind.value, "samples": samples, "all_pass": ok, "checks": checks}
    return _dump_json(report), EXIT_OK if ok else EXIT_INVARIANT


def cmd_perturb(cfg: RunConfig, m: int, n: int, index: int, width: float, amplitude: float,
                seeds: int = 16, vertex: int = 0):
    oval = cfg.build()
    found = find_birkhoff(oval, m, n, seeds=seeds, seed=cfg.seed)
    if not 0 <= index < len(found):
        raise DomainError(f"orbit index {index} not available ({len(found)} orbits found)")
    orbit = found.orbits[index]
    if not 0 <= vertex < n:
        raise ConfigError(f"vertex must lie in [0, {n})")
    try:
        res = break_degeneracy(oval, orbit, width, amplitude, vertex=vertex)
    except InvalidOvalError as exc:
        raise DomainError(f"perturbed curve is not an oval ({exc})") from exc
    report = {"orbit": orbit.to_dict(), "old_class": orbit.stability, **res.to_dict()}
    return _dump_json(report), EXIT_OK


def cmd_area(cfg: RunConfig):
    oval = cfg.build()
    cert = oval.certificate()
    report = {
        "surface": oval.kind.value,
        "length": oval.length,
        "enclosed_area": oval.enclosed_area(),
        "total_curvature": oval.total_curvature(),
        "min_curvature": cert.min_curvature,
    }
    return _dump_json(report), EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ovalbilliards", description="Billiards in ovals on constant-curvature surfaces.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", default="-", help="output file, '-' for stdout")
        return sp

    sp = add("simulate", "iterate the billiard map from one phase point")
    sp.add_argument("--s0", type=float, required=True)
    sp.add_argument("--psi0", type=float, required=True)
    sp.add_argument("--steps", type=int, required=True)

    sp = add("portrait", "iterate a grid of initial conditions")
    sp.add_argument("--grid-s", type=int, required=True)
    sp.add_argument("--grid-psi", type=int, required=True)
    sp.add_argument("--steps", type=int, required=True)

    sp = add("find-orbits", "search for Birkhoff periodic orbits")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seeds", type=int, default=16)

    sp = add("verify", "run the map invariant suite")
    sp.add_argument("--samples", type=int, default=100)

    sp = add("perturb", "bend the boundary at an orbit vertex and recompute its trace")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--width", type=float, required=True)
    sp.add_argument("--amplitude", type=float, required=True)
    sp.add_argument("--seeds", type=int, default=16)
    sp.add_argument("--vertex", type=int, default=0)

    add("area", "length, enclosed area and total curvature of the oval")
    return p


def run(argv=None) -> tuple:
    """Parse ``argv`` and execute; returns ``(output text, exit code, out path)``."""
    args = _parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)
    cfg = RunConfig.load(args.config)
    c = args.command
    if c == "simulate":
        text, code = cmd_simulate(cfg, args.s0, args.psi0, args.steps)
    elif c == "portrait":
        text, code = cmd_portrait(cfg, args.grid_s, args.grid_psi, args.steps)
    elif c == "find-orbits":
        text, code = cmd_find_orbits(cfg, args.m, args.n, args.seeds)
    elif c == "verify":
        text, code = cmd_verify(cfg, args.samples)
    elif c == "perturb":
        text, code = cmd_perturb(cfg, args.m, args.n, args.index, args.width, args.amplitude,
                                 seeds=args.seeds, vertex=args.vertex)
    else:
        text, code = cmd_area(cfg)
    return text, code, args.out


def _emit(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    try:
        text, code, out = run(argv)
    except (UsageError, InvalidOvalError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BilliardError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        _emit(text, out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
