import math

import pytest

from ovalbilliards.geometry import EUCLIDEAN, HYPERBOLIC, SPHERE
from ovalbilliards.oval import OvalSpec, build_oval

SURFACES = (EUCLIDEAN, SPHERE, HYPERBOLIC)

# the three test ovals of the acceptance suite
TEST_SPECS = {
    "ellipse": OvalSpec.ellipse(1.2, 1.0),
    "sphere": OvalSpec.polar(SPHERE, 0.8, [(0.0, 0.0), (0.05, 0.0)]),
    "hyperbolic": OvalSpec.polar(HYPERBOLIC, 0.8, [(0.0, 0.0), (0.05, 0.0)]),
}

# polar ovals without reflection symmetry, one per surface
GENERIC_SPECS = {
    EUCLIDEAN: OvalSpec.polar(EUCLIDEAN, 1.0, [(0.0, 0.0), (0.06, 0.0), (0.0, 0.02)]),
    SPHERE: OvalSpec.polar(SPHERE, 0.8, [(0.0, 0.0), (0.05, 0.0), (0.0, 0.015)]),
    HYPERBOLIC: OvalSpec.polar(HYPERBOLIC, 0.8, [(0.0, 0.0), (0.05, 0.0), (0.0, 0.015)]),
}

CIRCLE_RADII = {EUCLIDEAN: 1.0, SPHERE: math.pi / 4, HYPERBOLIC: 1.0}

_cache = {}


def cached_oval(key, spec):
    if key not in _cache:
        _cache[key] = build_oval(spec)
    return _cache[key]


def test_oval(name):
    return cached_oval(("test", name), TEST_SPECS[name])


test_oval.__test__ = False


def generic_oval(kind):
    return cached_oval(("generic", kind), GENERIC_SPECS[kind])


def circle_oval(kind, radius=None):
    r = CIRCLE_RADII[kind] if radius is None else radius
    return cached_oval(("circle", kind, r), OvalSpec.circle(kind, r))


@pytest.fixture(params=SURFACES, ids=lambda k: k.value)
def kind(request):
    return request.param


@pytest.fixture
def generic(kind):
    return generic_oval(kind)


@pytest.fixture
def circle(kind):
    return circle_oval(kind)


@pytest.fixture
def unit_circle():
    return circle_oval(EUCLIDEAN, 1.0)


@pytest.fixture
def ellipse():
    return test_oval("ellipse")
