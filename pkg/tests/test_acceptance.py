"""Acceptance suite: one PASS/FAIL line per criterion, then the assertion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines
next to the test names; they are also echoed when output capture is on.
"""
import json
import math
import time

import numpy as np
import pytest

from conftest import circle_oval, generic_oval, test_oval
from ovalbilliards import oracles
from ovalbilliards.billiard import PhasePoint, chord_arrays, dt_matrix, gen_hessian, iterate, next_impact, wrap_delta
from ovalbilliards.cli import main
from ovalbilliards.geometry import EUCLIDEAN, HYPERBOLIC, SPHERE
from ovalbilliards.oval import bump_profile, constant_profile, fourier_profile, normal_perturbation
from ovalbilliards.orbits import (
    Configuration,
    break_degeneracy,
    find_birkhoff,
    make_orbit,
    strip_bound,
    strip_check,
)

KINDS = (EUCLIDEAN, SPHERE, HYPERBOLIC)
PI = math.pi


def report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {k} {'PASS' if ok else 'FAIL'}: {detail}")


def chord_sample(oval, n, seed):
    rng = np.random.default_rng(seed)
    s0 = rng.uniform(0.0, oval.length, n)
    return s0, s0 + rng.uniform(0.05, 0.95, n) * oval.length


def phase_sample(oval, n, seed):
    rng = np.random.default_rng(seed)
    return [PhasePoint(float(s), float(p)) for s, p in
            zip(rng.uniform(0.0, oval.length, n), rng.uniform(0.05, PI - 0.05, n))]


@pytest.fixture(scope="module")
def map_data():
    """DT, next impact and the reversed round trip at 1000 points per surface."""
    out = {}
    for kind in KINDS:
        ov = generic_oval(kind)
        rows = []
        for x in phase_sample(ov, 1000, 11):
            y = next_impact(ov, x)
            z = next_impact(ov, y.flipped()).flipped()
            rows.append((x, y, z, dt_matrix(ov, x)))
        out[kind] = (ov, rows)
    return out


def test_criterion_01_first_derivatives(capsys):
    t = time.perf_counter()
    worst = 0.0
    for kind in KINDS:
        ov = generic_oval(kind)
        s0, s1 = chord_sample(ov, 500, 1)
        ch = chord_arrays(ov, s0, s1)
        fd0, fd1 = oracles.fd_gen_derivs(ov, s0, s1)
        worst = max(worst, np.max(np.abs(-ch["cos0"] - fd0)), np.max(np.abs(ch["cos1"] - fd1)))
    dt = time.perf_counter() - t
    ok = worst < 1e-6 and dt < 5.0
    report(capsys, 1, ok, f"max |analytic - FD| = {worst:.2e} (< 1e-6), runtime {dt:.2f} s (< 5 s)")
    assert ok


def test_criterion_02_second_derivatives(capsys):
    worst = 0.0
    for kind in KINDS:
        ov = generic_oval(kind)
        s0, s1 = chord_sample(ov, 500, 2)
        f00, f01, f11 = oracles.fd_gen_hessian(ov, s0, s1)
        for i in range(len(s0)):
            H = gen_hessian(ov, s0[i], s1[i])
            worst = max(worst, abs(H.h00 - f00[i]), abs(H.h01 - f01[i]), abs(H.h11 - f11[i]))
    ok = worst < 1e-5
    report(capsys, 2, ok, f"max Hessian entry error = {worst:.2e} (< 1e-5)")
    assert ok


def test_criterion_03_jacobian(capsys):
    worst = 0.0
    for kind in KINDS:
        ov = generic_oval(kind)
        for x in phase_sample(ov, 300, 3):
            J = dt_matrix(ov, x).matrix
            F = oracles.fd_jacobian(ov, x)
            worst = max(worst, float(np.max(np.abs(J - F)) / np.max(np.abs(F))))
    ok = worst < 1e-5
    report(capsys, 3, ok, f"max relative Jacobian error = {worst:.2e} (< 1e-5)")
    assert ok


def test_criterion_04_measure(capsys, map_data):
    worst = 0.0
    for ov, rows in map_data.values():
        for x, y, _, J in rows:
            worst = max(worst, abs(J.det - math.sin(x.psi) / math.sin(y.psi)))
    ok = worst < 1e-8
    report(capsys, 4, ok, f"max |det DT - sin psi0/sin psi1| = {worst:.2e} (< 1e-8)")
    assert ok


def test_criterion_05_reversibility(capsys, map_data):
    worst = 0.0
    for ov, rows in map_data.values():
        for x, _, z, _ in rows:
            worst = max(worst, abs(float(wrap_delta(z.s - x.s, ov.length))), abs(z.psi - x.psi))
    ok = worst < 1e-8
    report(capsys, 5, ok, f"max |ITIT(x) - x| = {worst:.2e} (< 1e-8)")
    assert ok


def test_criterion_06_twist(capsys, map_data):
    bmin = min(J.b for _, rows in map_data.values() for *_, J in rows)
    ok = bmin > 0.0
    report(capsys, 6, ok, f"min ds1/dpsi0 = {bmin:.3e} over 3000 points (> 0)")
    assert ok


def test_criterion_07_circle_integrability(capsys):
    psi_dev = adv_dev = trace_dev = 0.0
    for kind in KINDS:
        ov = circle_oval(kind)
        orbit = iterate(ov, PhasePoint(0.123, 0.987654321), 10_000)
        psi = np.array([x.psi for x in orbit])
        s = np.array([x.s for x in orbit])
        adv = np.mod(np.diff(s), ov.length)
        psi_dev = max(psi_dev, float(np.ptp(psi)))
        adv_dev = max(adv_dev, float(np.ptp(adv)))
        for m, n in [(1, 2), (1, 3), (1, 4), (2, 5), (3, 7)]:
            po = make_orbit(ov, Configuration.uniform(ov, m, n, 0.3), family=True)
            trace_dev = max(trace_dev, abs(po.trace - 2.0))
    ok = psi_dev < 1e-9 and adv_dev < 1e-8 and trace_dev < 1e-6
    report(capsys, 7, ok, f"psi spread {psi_dev:.2e} (< 1e-9), advance spread {adv_dev:.2e} (< 1e-8), "
                          f"max |trace - 2| {trace_dev:.2e} (< 1e-6)")
    assert ok


CASES = [(name, mn) for name in ("ellipse", "sphere", "hyperbolic") for mn in ((1, 2), (1, 3), (1, 4))]


@pytest.fixture(scope="module")
def birkhoff():
    t = time.perf_counter()
    found = {(name, mn): find_birkhoff(test_oval(name), *mn, seeds=16, seed=0) for name, mn in CASES}
    return found, time.perf_counter() - t


def test_criterion_08_birkhoff_existence(capsys, birkhoff):
    found, dt = birkhoff
    counts = {f"{name}{mn}": found[name, mn].distinct_found for name, mn in CASES}
    classes = {o.stability for o in found["ellipse", (1, 2)]}
    ok = all(c >= 2 for c in counts.values()) and classes == {"hyperbolic", "elliptic"} and dt < 30.0
    fams = [f"{name}{mn}" for name, mn in CASES if found[name, mn].family]
    report(capsys, 8, ok, f"distinct orbits {counts}; ellipse (1,2) classes {sorted(classes)}; "
                          f"families (counted via a second member) {fams}; runtime {dt:.1f} s (< 30 s)")
    assert ok


def test_criterion_09_mackay_meiss(capsys, birkhoff):
    found, _ = birkhoff
    worst, count = 0.0, 0
    for res in found.values():
        for o in res:
            if not o.degenerate:
                worst = max(worst, o.residue_discrepancy)
                count += 1
    ok = count > 0 and worst < 1e-6
    report(capsys, 9, ok, f"max residue discrepancy {worst:.2e} over {count} nondegenerate orbits (< 1e-6)")
    assert ok


def test_criterion_10_compact_strip(capsys, birkhoff):
    found, _ = birkhoff
    bad = []
    corrected_ok = True
    for (name, (m, n)), res in found.items():
        ov = test_oval(name)
        bound = strip_bound(ov, n)
        fixed = strip_bound(ov, n, rule="gauss-bonnet")
        for o in res:
            if not strip_check(o, bound):
                bad.append(f"{name}({m},{n}) max psi {max(o.psi):.4f} < delta {bound.delta:.4f}")
            corrected_ok &= strip_check(o, fixed)
    ok = not bad
    detail = "all orbits inside the strip" if ok else "; ".join(bad)
    detail += f" | doubled-area rule m0 > 2 pi n/(2 pi - A): {'all pass' if corrected_ok else 'violations'}"
    report(capsys, 10, ok, detail)
    assert ok


def test_criterion_11_degeneracy_breaking(capsys):
    ov = circle_oval(EUCLIDEAN, 1.0)
    orbit = find_birkhoff(ov, 1, 2, seeds=16, seed=0).orbits[0]
    hit = break_degeneracy(ov, orbit, width=0.5, amplitude=0.05)
    zero = break_degeneracy(ov, orbit, width=0.5, amplitude=0.0)
    shift = abs(hit.new_trace - 2.0)
    still = abs(zero.new_trace - zero.old_trace)
    ok = shift > 1e-4 and hit.orbit_residual < 1e-8 and still < 1e-12
    report(capsys, 11, ok, f"|trace - 2| = {shift:.3e} (> 1e-4), residual {hit.orbit_residual:.1e} (< 1e-8), "
                           f"amplitude 0 shift {still:.1e} (< 1e-12)")
    assert ok


def test_criterion_12_perturbed_ovality(capsys):
    failures, worst_norm, tried = [], 0.0, 0
    for name in ("ellipse", "sphere", "hyperbolic"):
        ov = test_oval(name)
        l = ov.length
        profiles = [constant_profile(ov, 0.01), constant_profile(ov, -0.01)]
        for mode in (1, 2, 3, 5):
            p = fourier_profile(ov, 1.0, mode)
            profiles.append(p.scaled(0.01 / p.c2_norm))
        for s0 in (0.0, 0.37 * l):
            p = bump_profile(ov, s0, 0.5, 1.0)
            profiles += [p.scaled(0.01 / p.c2_norm), p.scaled(-0.01 / p.c2_norm)]
        for p in profiles:
            tried += 1
            worst_norm = max(worst_norm, p.c2_norm)
            cert = normal_perturbation(ov, p, validate=False).certificate()
            if not cert.ok:
                failures.append(f"{name}: {cert.failures}")
    ok = not failures and worst_norm <= 0.01 + 1e-12
    report(capsys, 12, ok, f"{tried - len(failures)}/{tried} perturbed ovals certified, max norm {worst_norm:.4f}")
    assert ok


CLI_CASES = [
    ["simulate", "--s0", "0.3", "--psi0", "1.1", "--steps", "200"],
    ["portrait", "--grid-s", "3", "--grid-psi", "3", "--steps", "20"],
    ["find-orbits", "--m", "1", "--n", "3"],
    ["verify", "--samples", "20"],
    ["perturb", "--m", "1", "--n", "2", "--width", "0.4", "--amplitude", "0.005"],
    ["area"],
]


def test_criterion_13_determinism(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"surface": "sphere", "seed": 7, "curve": {
        "family": "polar", "c0": 0.8, "coeffs": [[0, 0], [0.05, 0]]}}))
    mismatched = []
    for argv in CLI_CASES:
        blobs = []
        for rep in range(2):
            out = tmp_path / f"{argv[0]}_{rep}.out"
            code = main(argv + ["--config", str(cfg), "--out", str(out)])
            assert code == 0, argv
            blobs.append(out.read_bytes())
        if blobs[0] != blobs[1] or not blobs[0]:
            mismatched.append(argv[0])
    capsys.readouterr()
    ok = not mismatched
    report(capsys, 13, ok, f"{len(CLI_CASES)} commands byte-identical across runs" if ok
           else f"differing output: {mismatched}")
    assert ok
