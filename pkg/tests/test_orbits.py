import json
import math

import numpy as np
import pytest

from conftest import circle_oval, generic_oval, test_oval
from ovalbilliards import geometry as geo
from ovalbilliards import oracles
from ovalbilliards.errors import DomainError, UsageError
from ovalbilliards.geometry import EUCLIDEAN, HYPERBOLIC, SPHERE
from ovalbilliards.orbits import (
    Configuration,
    _action_raw,
    action,
    action_gradient,
    action_hessian,
    break_degeneracy,
    classify,
    find_birkhoff,
    make_orbit,
    mackay_meiss_residue,
    newton_refine,
    orbit_trace,
    strip_bound,
    strip_check,
)

PI = math.pi


def cfg(s, m=1):
    return Configuration(len(s), m, tuple(s))


def _search(name, m, n, seeds=16):
    key = (name, m, n, seeds)
    if key not in _search.cache:
        _search.cache[key] = find_birkhoff(test_oval(name), m, n, seeds=seeds)
    return _search.cache[key]


_search.cache = {}


# -- action ---------------------------------------------------------------------


def test_action_examples(unit_circle, ellipse):
    assert action(unit_circle, cfg([0, PI])) == pytest.approx(-4)
    assert action(unit_circle, cfg([0, 2 * PI / 3, 4 * PI / 3])) == pytest.approx(-3 * math.sqrt(3))
    s = [0.1, 1.3, 2.9, 4.4]
    P = [ellipse.point(v) for v in s]
    direct = -sum(geo.geodesic_distance(P[i], P[(i + 1) % 4]) for i in range(4))
    assert action(ellipse, cfg(s)) == pytest.approx(direct, abs=1e-14)


def test_collision_set_rejected(unit_circle):
    with pytest.raises(DomainError):
        action(unit_circle, cfg([0.0, 1e-9, 3.0]))
    with pytest.raises(DomainError):
        action_gradient(unit_circle, cfg([0.0, 3.0, 2 * PI - 1e-9]))


def test_configuration_validation():
    with pytest.raises(UsageError):
        Configuration(3, 1, (0.0, 1.0))
    with pytest.raises(UsageError):
        Configuration(2, 2, (0.0, 1.0))


def test_gradient_zero_at_symmetric_orbits(unit_circle, ellipse):
    assert np.allclose(action_gradient(unit_circle, cfg([0, 2 * PI / 3, 4 * PI / 3])), 0, atol=1e-14)
    l = ellipse.length
    assert np.allclose(action_gradient(ellipse, cfg([0, l / 2])), 0, atol=1e-13)


def _random_config(oval, n, m, seed):
    rng = np.random.default_rng(seed)
    base = np.arange(n) * m * oval.length / n
    return cfg(base + rng.uniform(0, 0.3, n) * oval.length / n + rng.uniform(0, oval.length), m)


@pytest.mark.parametrize("n,m", [(2, 1), (3, 1), (5, 2)])
def test_gradient_and_hessian_vs_fd(generic, n, m):
    c = _random_config(generic, n, m, seed=n)
    raw = lambda ov, s: _action_raw(ov, s, m)
    g = action_gradient(generic, c)
    assert np.max(np.abs(g - oracles.fd_action_gradient(raw, generic, c.array))) < 1e-6
    H = action_hessian(generic, c).matrix
    assert np.max(np.abs(H - oracles.fd_action_hessian(raw, generic, c.array))) < 1e-5
    assert np.allclose(H, H.T)


def test_hessian_degenerate_on_circle_family(unit_circle, ellipse):
    assert abs(action_hessian(unit_circle, cfg([0.3, 0.3 + PI])).det) < 1e-12
    l = ellipse.length
    minor = cfg([l / 4, 3 * l / 4])
    assert abs(action_hessian(ellipse, minor).det) > 1e-3


# -- Newton -----------------------------------------------------------------------


def test_newton_exact_orbit_unchanged(ellipse):
    l = ellipse.length
    c = cfg([0.0, l / 2])
    assert newton_refine(ellipse, c).s == c.s


def test_newton_basin(ellipse):
    l = ellipse.length
    for exact in ([0.0, l / 2], [l / 4, 3 * l / 4]):
        out = newton_refine(ellipse, cfg([exact[0] + 1e-3, exact[1] - 1e-3]))
        assert np.allclose(out.array, exact, atol=1e-10)


def test_newton_flat_direction(unit_circle):
    tri = np.array([0, 2 * PI / 3, 4 * PI / 3]) + np.array([1e-3, -2e-3, 5e-4])
    out = newton_refine(unit_circle, cfg(tri))
    assert np.linalg.norm(action_gradient(unit_circle, out)) < 1e-11
    gaps = np.diff(np.append(out.array, out.array[0] + 2 * PI))
    assert np.allclose(gaps, 2 * PI / 3, atol=1e-9)
    assert np.max(np.abs(out.array - tri)) < 1e-2


# -- stability ----------------------------------------------------------------------


def test_classify_examples():
    assert classify(2.5) == ("hyperbolic", True)
    assert classify(2.0) == ("parabolic", False)
    assert classify(-1.0) == ("elliptic", True)
    assert classify(-2.0 - 1e-9) == ("parabolic", False)


@pytest.mark.parametrize("m,n", [(1, 2), (1, 3), (2, 5), (3, 7)])
def test_circle_traces(kind, m, n):
    ov = circle_oval(kind)
    o = make_orbit(ov, Configuration.uniform(ov, m, n, 0.2))
    assert orbit_trace(ov, o) == pytest.approx(2.0, abs=1e-6)
    assert np.linalg.det(o.product) == pytest.approx(1.0, abs=1e-7)
    assert o.closure_residual < 1e-9


def test_ellipse_axis_stability(ellipse):
    l = ellipse.length
    major = make_orbit(ellipse, cfg([0.0, l / 2]))
    minor = make_orbit(ellipse, cfg([l / 4, 3 * l / 4]))
    assert abs(major.trace) > 2 and major.stability == "hyperbolic"
    assert abs(minor.trace) < 2 and minor.stability == "elliptic"
    for o in (major, minor):
        lhs, rhs = mackay_meiss_residue(ellipse, o)
        assert abs(lhs - rhs) / max(1, abs(lhs)) < 1e-6
        assert np.all(o.b < 0)


def test_residue_circle_both_vanish(unit_circle):
    o = make_orbit(unit_circle, cfg([0.0, PI]))
    lhs, rhs = mackay_meiss_residue(unit_circle, o)
    assert abs(lhs) < 1e-12 and abs(rhs) < 1e-12


# -- search -----------------------------------------------------------------------


def test_find_ellipse_axis_orbits():
    res = _search("ellipse", 1, 2)
    assert len(res) == 2
    l = test_oval("ellipse").length
    sets = sorted(sorted(np.round(np.mod(o.config.array, l) / (l / 4)).astype(int) % 4) for o in res)
    assert sets == [[0, 2], [1, 3]]
    assert {o.stability for o in res} == {"hyperbolic", "elliptic"}


def test_find_circle_family(unit_circle):
    res = find_birkhoff(unit_circle, 1, 3)
    assert len(res) == 1 and res.family
    o = res.orbits[0]
    assert o.degenerate and o.stability == "parabolic"
    assert np.allclose(o.psi, PI / 3, atol=1e-9)
    assert res.distinct_found >= 2


def test_find_sphere_two_orbits():
    res = _search("sphere", 1, 2)
    assert len(res) >= 2


@pytest.mark.parametrize("name", ["ellipse", "sphere", "hyperbolic"])
@pytest.mark.parametrize("n", [2, 3])
def test_found_orbits_are_critical_and_closed(name, n):
    for o in _search(name, 1, n):
        assert o.residual < 1e-9
        assert o.closure_residual < 1e-9
        assert abs(np.linalg.det(o.product) - 1) < 1e-7
        assert strip_check(o, strip_bound(test_oval(name), n))
        if not o.degenerate:
            assert o.residue_discrepancy < 1e-6


@pytest.mark.parametrize("name", ["ellipse", "sphere", "hyperbolic"])
def test_global_minimizer_not_elliptic(name):
    res = _search(name, 1, 2)
    best = min(res, key=lambda o: o.action)
    assert abs(best.trace) >= 2 - 1e-8


def test_find_rejects_bad_rotation_numbers(unit_circle):
    with pytest.raises(UsageError):
        find_birkhoff(unit_circle, 2, 4)
    with pytest.raises(UsageError):
        find_birkhoff(unit_circle, 3, 2)


def test_search_is_deterministic():
    ov = generic_oval(SPHERE)
    a = find_birkhoff(ov, 1, 2, seeds=8, seed=5)
    b = find_birkhoff(ov, 1, 2, seeds=8, seed=5)
    assert [o.to_dict() for o in a] == [o.to_dict() for o in b]


def test_generic_oval_orbits(generic):
    res = find_birkhoff(generic, 1, 3, seeds=16)
    assert len(res) >= 2
    assert {o.stability for o in res} <= {"hyperbolic", "elliptic"}


def test_orbit_report_json(ellipse):
    d = _search("ellipse", 1, 2).orbits[0].to_dict()
    for key in ("n", "m", "s", "psi", "trace", "hessian_det", "class", "residue_lhs", "residue_rhs"):
        assert key in d
    json.dumps(d)


def test_star_polygon_flagged(unit_circle):
    o = make_orbit(unit_circle, Configuration.uniform(unit_circle, 2, 5))
    assert o.to_dict()["star_polygon"]
    assert any("star" in note for note in o.notes)


# -- compact strip -------------------------------------------------------------------


def test_strip_bound_examples():
    assert strip_bound(circle_oval(EUCLIDEAN), 3).delta == pytest.approx(PI / 3)
    assert strip_bound(circle_oval(HYPERBOLIC), 2).delta == pytest.approx(PI / 2)
    cap = circle_oval(SPHERE, PI / 3)  # enclosed area pi
    b = strip_bound(cap, 3)
    assert b.area == pytest.approx(PI, abs=1e-9)
    assert b.m0 == 4 and b.delta == pytest.approx(PI / 4)
    with pytest.raises(UsageError):
        strip_bound(cap, 1)


def test_strip_check_examples(unit_circle):
    dia = make_orbit(unit_circle, cfg([0.0, PI]))
    assert strip_check(dia, strip_bound(unit_circle, 2))
    tri = make_orbit(unit_circle, Configuration.uniform(unit_circle, 1, 3))
    assert strip_check(tri, strip_bound(unit_circle, 3))


def _fan_area(points):
    # spherical polygon area from a triangle fan at the centroid direction
    c = points.mean(axis=0)
    c /= np.linalg.norm(c)
    total = 0.0
    for a, b in zip(points, np.roll(points, -1, axis=0)):
        num = abs(np.dot(c, np.cross(a, b)))
        den = 1 + np.dot(c, a) + np.dot(a, b) + np.dot(b, c)
        total += 2 * math.atan2(num, den)
    return total


def test_sphere_strip_gauss_bonnet():
    """Inscribed-polygon Gauss-Bonnet on the sphere: A_P = 2 pi - 2 sum psi_i.

    The rule ``m0 > pi n / (2 pi - A)`` comes from ``A_P >= 2 pi - sum psi_i``
    and is too weak by a factor 2: the hyperbolic (1, 4) orbit of the sphere
    test oval has every psi_i below pi / m0. The doubled constant holds.
    """
    ov = test_oval("sphere")
    res = _search("sphere", 1, 4)
    standard = strip_bound(ov, 4)
    corrected = strip_bound(ov, 4, rule="gauss-bonnet")
    violators = []
    for o in res:
        pts = ov.positions(o.config.array)
        assert _fan_area(pts) == pytest.approx(2 * PI - 2 * sum(o.psi), abs=1e-9)
        assert strip_check(o, corrected)
        if not strip_check(o, standard):
            violators.append(o)
    assert violators and all(o.stability == "hyperbolic" for o in violators)
    assert max(violators[0].psi) < standard.delta


# -- degeneracy breaking ---------------------------------------------------------------


def test_break_degeneracy_circle(unit_circle):
    o = make_orbit(unit_circle, cfg([0.0, PI]))
    r = break_degeneracy(unit_circle, o, 0.5, 0.05)
    assert abs(r.new_trace - 2) > 1e-4 and r.moved_off
    assert r.orbit_residual < 1e-8
    zero = break_degeneracy(unit_circle, o, 0.5, 0.0)
    assert zero.new_trace == pytest.approx(zero.old_trace, abs=1e-12)
    assert not zero.moved_off


def test_break_degeneracy_first_order_sign(kind):
    ov = circle_oval(kind)
    o = make_orbit(ov, Configuration.uniform(ov, 1, 2))
    up = break_degeneracy(ov, o, 0.5, 0.01).new_trace - o.trace
    down = break_degeneracy(ov, o, 0.5, -0.01).new_trace - o.trace
    assert up * down < 0
    assert up == pytest.approx(-down, rel=1e-3)


def test_break_degeneracy_support_overlap(unit_circle):
    o = make_orbit(unit_circle, cfg([0.0, 0.2, PI]))
    with pytest.raises(UsageError):
        break_degeneracy(unit_circle, o, 0.5, 0.05)


def test_break_degeneracy_keeps_hyperbolic_class(ellipse):
    l = ellipse.length
    o = make_orbit(ellipse, cfg([0.0, l / 2]))
    r = break_degeneracy(ellipse, o, 0.5, 0.005)
    assert r.new_orbit.stability == "hyperbolic"
    assert r.orbit_residual < 1e-8
