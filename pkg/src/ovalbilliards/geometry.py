"""Ambient models of the three unit-curvature surfaces.

Every surface lives in R^3:

* ``EUCLIDEAN``  the plane ``z = 1``
* ``SPHERE``     the open upper hemisphere ``|X| = 1, z > 0``
* ``HYPERBOLIC`` the upper sheet ``x^2 + y^2 - z^2 = -1, z >= 1``

Geodesics are the intersections of the surface with planes through the
origin. The public functions take :class:`SurfacePoint` and
:class:`TangentVector` values; the underscore helpers work on raw
``(..., 3)`` arrays and are what the hot loops in the other modules use.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateChordError,
    DomainError,
    NumericalDomainError,
    UsageError,
)

CLAMP_TOL = 1e-9
RENORM_TOL = 1e-9
COINCIDENT_TOL = 1e-12


class SurfaceKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    SPHERE = "sphere"
    HYPERBOLIC = "hyperbolic"

    @property
    def curvature(self) -> int:
        """Gaussian curvature of the model: 0, +1 or -1."""
        return {"euclidean": 0, "sphere": 1, "hyperbolic": -1}[self.value]

    @classmethod
    def parse(cls, name) -> "SurfaceKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise UsageError(f"unknown surface {name!r}") from None


EUCLIDEAN = SurfaceKind.EUCLIDEAN
SPHERE = SurfaceKind.SPHERE
HYPERBOLIC = SurfaceKind.HYPERBOLIC

BASEPOINT = np.array([0.0, 0.0, 1.0])
_MINK = np.array([1.0, 1.0, -1.0])


# ---------------------------------------------------------------------------
# array-level helpers


def _inner(kind: SurfaceKind, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if kind is HYPERBOLIC:
        return np.sum(u * v * _MINK, axis=-1)
    return np.sum(u * v, axis=-1)


def _constraint_residual(kind: SurfaceKind, X):
    X = np.asarray(X, dtype=float)
    if kind is EUCLIDEAN:
        return X[..., 2] - 1.0
    if kind is SPHERE:
        return np.sum(X * X, axis=-1) - 1.0
    return _inner(kind, X, X) + 1.0


def _normalize(kind: SurfaceKind, X):
    """Radially rescale ambient vectors onto the model surface."""
    X = np.asarray(X, dtype=float)
    if kind is EUCLIDEAN:
        return X / X[..., 2:3]
    if kind is SPHERE:
        return X / np.linalg.norm(X, axis=-1, keepdims=True)
    q = -_inner(kind, X, X)
    return X / np.sqrt(q)[..., None]


def _distance(kind: SurfaceKind, X, Y):
    """Geodesic distance between arrays of points.

    Uses half-chord formulas (``2 asin``/``2 asinh``) which keep full relative
    precision for short chords, where ``arccos``/``arccosh`` lose half the
    digits.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    D = X - Y
    if kind is EUCLIDEAN:
        return np.sqrt(np.sum(D * D, axis=-1))
    if kind is SPHERE:
        c = np.sqrt(np.sum(D * D, axis=-1)) / 2.0
        return 2.0 * np.arcsin(np.minimum(c, 1.0))
    q = np.maximum(_inner(kind, D, D), 0.0)
    return 2.0 * np.arcsinh(np.sqrt(q) / 2.0)


def _sin_like(kind: SurfaceKind, d):
    """``d``, ``sin d`` or ``sinh d``."""
    if kind is EUCLIDEAN:
        return d
    if kind is SPHERE:
        return np.sin(d)
    return np.sinh(d)


def _cos_like(kind: SurfaceKind, d):
    if kind is EUCLIDEAN:
        return np.ones_like(d)
    if kind is SPHERE:
        return np.cos(d)
    return np.cosh(d)


def _tan_like(kind: SurfaceKind, d):
    """``d``, ``tan d`` or ``tanh d``."""
    if kind is EUCLIDEAN:
        return d
    if kind is SPHERE:
        return np.tan(d)
    return np.tanh(d)


def _geodesic(kind: SurfaceKind, X, u, t):
    X = np.asarray(X, dtype=float)
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    if kind is EUCLIDEAN:
        return X + t * u
    return _cos_like(kind, t) * X + _sin_like(kind, t) * u


def _geodesic_velocity(kind: SurfaceKind, X, u, t):
    X = np.asarray(X, dtype=float)
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    if kind is EUCLIDEAN:
        return np.broadcast_to(u, np.broadcast(X, t * u).shape).copy()
    if kind is SPHERE:
        return -np.sin(t) * X + np.cos(t) * u
    return np.sinh(t) * X + np.cosh(t) * u


def _tangent_toward(kind: SurfaceKind, X, Y):
    """Unit initial velocity of the geodesic from X to Y (arrays)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if kind is EUCLIDEAN:
        w = Y - X
    elif kind is SPHERE:
        # Y = cos d X + sin d tau
        w = Y - _inner(kind, X, Y)[..., None] * X
    else:
        # Y = cosh d X + sinh d tau, with <<X,Y>> = -cosh d
        w = Y + _inner(kind, X, Y)[..., None] * X
    n = np.sqrt(np.maximum(_inner(kind, w, w), 0.0))
    return w / n[..., None]


def _normal_rotate(kind: SurfaceKind, X, T):
    """Rotate tangent vectors T at X by +90 degrees in the surface metric.

    For a counterclockwise curve with unit tangent T this is the inward
    normal, and ``{T, result}`` is positively oriented.
    """
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    if kind is EUCLIDEAN:
        out = np.empty(np.broadcast(X, T).shape)
        out[..., 0] = -T[..., 1]
        out[..., 1] = T[..., 0]
        out[..., 2] = 0.0
        return out
    c = np.cross(X, T)
    if kind is HYPERBOLIC:
        c = c * _MINK
    return c


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class SurfacePoint:
    """A point of one of the model surfaces, in ambient coordinates.

    Construction renormalizes onto the model when the constraint residual is
    at most 1e-9 and rejects anything further off.
    """

    kind: SurfaceKind
    x: float
    y: float
    z: float

    def __post_init__(self):
        kind = SurfaceKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        v = np.array([self.x, self.y, self.z], dtype=float)
        if not np.all(np.isfinite(v)):
            raise DomainError("non-finite coordinates")
        res = float(_constraint_residual(kind, v))
        if abs(res) > RENORM_TOL:
            raise DomainError(f"point {v} is not on the {kind.value} model (residual {res:.3g})")
        if kind is SPHERE and v[2] <= 0.0:
            raise DomainError("sphere points must lie in the open upper hemisphere")
        if kind is HYPERBOLIC and v[2] < 1.0 - RENORM_TOL:
            raise DomainError("hyperbolic points must lie on the upper sheet")
        if res != 0.0:
            v = _normalize(kind, v)
        for name, val in zip("xyz", v):
            object.__setattr__(self, name, float(val))

    @classmethod
    def from_array(cls, kind, v) -> "SurfacePoint":
        v = np.asarray(v, dtype=float)
        return cls(SurfaceKind.parse(kind), float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def basepoint(cls, kind) -> "SurfacePoint":
        return cls(SurfaceKind.parse(kind), 0.0, 0.0, 1.0)

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class TangentVector:
    """A vector ``u`` tangent to the surface at ``base``."""

    base: SurfacePoint
    u: tuple

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(3)
        kind = self.base.kind
        if kind is EUCLIDEAN:
            off = abs(u[2])
        else:
            off = abs(float(_inner(kind, u, self.base.vec)))
        scale = max(1.0, float(np.linalg.norm(u)))
        if off > 1e-9 * scale:
            raise DomainError(f"vector {u} is not tangent at {self.base.vec} (residual {off:.3g})")
        object.__setattr__(self, "u", tuple(float(c) for c in u))

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.u)

    @property
    def kind(self) -> SurfaceKind:
        return self.base.kind

    def norm(self) -> float:
        return math.sqrt(max(metric_inner(self.kind, self.u, self.u), 0.0))

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.base, tuple(-c for c in self.u))


# ---------------------------------------------------------------------------
# public operations


def metric_inner(kind, u, v) -> float:
    """Ambient dot product, or the (+,+,-) Minkowski product on the hyperboloid."""
    return float(_inner(SurfaceKind.parse(kind), u, v))


def _same_surface(X: SurfacePoint, Y: SurfacePoint) -> SurfaceKind:
    if X.kind is not Y.kind:
        raise UsageError(f"points live on different surfaces ({X.kind.value}, {Y.kind.value})")
    return X.kind


def _clamped(value: float, lo: float, hi: float) -> float:
    if value < lo - CLAMP_TOL or value > hi + CLAMP_TOL:
        raise NumericalDomainError(f"argument {value!r} outside [{lo}, {hi}] beyond tolerance")
    return min(max(value, lo), hi)


def geodesic_distance(X: SurfacePoint, Y: SurfacePoint) -> float:
    """Geodesic distance ``d_S(X, Y)``."""
    kind = _same_surface(X, Y)
    if kind is SPHERE:
        _clamped(float(np.dot(X.vec, Y.vec)), -1.0, 1.0)
    elif kind is HYPERBOLIC:
        c = -float(_inner(kind, X.vec, Y.vec))
        if c < 1.0 - CLAMP_TOL:
            raise NumericalDomainError(f"arccosh argument {c!r} below 1 beyond tolerance")
    return float(_distance(kind, X.vec, Y.vec))


def geodesic_point(X: SurfacePoint, u: TangentVector, t: float) -> SurfacePoint:
    """Point at arclength ``t`` along the unit-speed geodesic from ``X`` in direction ``u``.

    On the sphere the result may leave the upper hemisphere; the caller is
    responsible for the domain, so the point is returned without the
    hemisphere check.
    """
    if u.base != X:
        raise UsageError("tangent vector is not based at X")
    kind = X.kind
    P = _normalize(kind, _geodesic(kind, X.vec, u.vec, t))
    if kind is SPHERE and P[2] <= 0.0:
        return _raw_point(kind, P)
    return SurfacePoint.from_array(kind, P)


def _raw_point(kind, P) -> SurfacePoint:
    pt = object.__new__(SurfacePoint)
    object.__setattr__(pt, "kind", kind)
    for name, val in zip("xyz", P):
        object.__setattr__(pt, name, float(val))
    return pt


def unit_tangent_toward(X: SurfacePoint, Y: SurfacePoint) -> TangentVector:
    """Unit tangent at ``X`` of the geodesic running from ``X`` to ``Y``."""
    kind = _same_surface(X, Y)
    if float(np.linalg.norm(X.vec - Y.vec)) <= COINCIDENT_TOL:
        raise DegenerateChordError("X and Y coincide")
    return TangentVector(X, tuple(_tangent_toward(kind, X.vec, Y.vec)))


def angle_between(u: TangentVector, v: TangentVector) -> float:
    if u.base != v.base:
        raise UsageError("tangent vectors have different base points")
    c = metric_inner(u.kind, u.u, v.u)
    return math.acos(min(max(c, -1.0), 1.0))


def project_radial(kind, w) -> SurfacePoint:
    """The positive multiple of ``w`` lying on the model surface."""
    kind = SurfaceKind.parse(kind)
    w = np.asarray(w, dtype=float)
    if kind is EUCLIDEAN:
        if not w[2] > 0.0:
            raise DomainError("euclidean projection needs z > 0")
    elif kind is SPHERE:
        if not np.linalg.norm(w) > 0.0:
            raise DomainError("cannot project the zero vector")
        if not w[2] > 0.0:
            raise DomainError("radial projection leaves the upper hemisphere")
    else:
        if not (float(_inner(kind, w, w)) < 0.0 and w[2] > 0.0):
            raise DomainError("hyperbolic projection needs a future timelike vector")
    return SurfacePoint.from_array(kind, _normalize(kind, w))
