"""Boundary ovals: construction, arclength, frames, certification, perturbation.

An :class:`Oval` wraps a periodic parametric curve ``gamma(t)`` given with
analytic derivatives (a "jet") in its native parameter ``t``. The speed is
sampled on a uniform grid and integrated spectrally, which gives the
arclength ``s(t)`` to near machine precision for smooth curves; the inverse
``t(s)`` is seeded by a periodic cubic spline and polished with Newton steps.
All derivatives with respect to ``s`` are then the analytic ``t``-derivatives
composed with that map, never derivatives of an interpolant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from shapely.geometry import LinearRing

from . import geometry as geo
from .errors import DomainError, InvalidOvalError, UsageError
from .geometry import EUCLIDEAN, HYPERBOLIC, SPHERE, SurfaceKind, SurfacePoint, TangentVector

DEFAULT_RESOLUTION = 2048
MIN_RESOLUTION = 64
HEMISPHERE_MARGIN = 1e-6


# ---------------------------------------------------------------------------
# curve specifications


@dataclass(frozen=True)
class OvalSpec:
    """Concrete description of a boundary curve.

    ``family`` is ``"circle"`` (geodesic ``radius``), ``"ellipse"`` (Euclidean
    semi-axes ``a``, ``b``) or ``"polar"`` (radial function
    ``c0 + sum_j a_j cos(j t) + b_j sin(j t)`` in geodesic polar coordinates).
    ``center`` defaults to the model basepoint ``(0, 0, 1)``.
    """

    kind: SurfaceKind
    family: str
    radius: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    c0: Optional[float] = None
    coeffs: tuple = ()
    center: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SurfaceKind.parse(self.kind))
        object.__setattr__(self, "coeffs", tuple((float(p), float(q)) for p, q in self.coeffs))
        if self.center is not None:
            c = SurfacePoint.from_array(self.kind, self.center)
            object.__setattr__(self, "center", (c.x, c.y, c.z))
        if self.family == "circle":
            if self.radius is None or not self.radius > 0:
                raise InvalidOvalError("positive_radius", f"circle radius must be > 0, got {self.radius}")
            if self.kind is SPHERE and not self.radius < math.pi / 2:
                raise InvalidOvalError("hemisphere", "spherical circle radius must be < pi/2")
        elif self.family == "ellipse":
            if self.kind is not EUCLIDEAN:
                raise UsageError("the ellipse family is only defined on the Euclidean plane")
            if not (self.a and self.b and self.a > 0 and self.b > 0):
                raise InvalidOvalError("positive_radius", "ellipse semi-axes must be > 0")
        elif self.family == "polar":
            if self.c0 is None:
                raise UsageError("polar family needs c0")
        else:
            raise UsageError(f"unknown curve family {self.family!r}")

    @classmethod
    def circle(cls, kind, radius, center=None) -> "OvalSpec":
        return cls(SurfaceKind.parse(kind), "circle", radius=float(radius), center=center)

    @classmethod
    def ellipse(cls, a, b, center=None) -> "OvalSpec":
        return cls(EUCLIDEAN, "ellipse", a=float(a), b=float(b), center=center)

    @classmethod
    def polar(cls, kind, c0, coeffs=(), center=None) -> "OvalSpec":
        return cls(SurfaceKind.parse(kind), "polar", c0=float(c0), coeffs=tuple(coeffs), center=center)

    @property
    def center_point(self) -> SurfacePoint:
        if self.center is None:
            return SurfacePoint.basepoint(self.kind)
        return SurfacePoint.from_array(self.kind, self.center)

    def to_dict(self) -> dict:
        curve = {"family": self.family}
        if self.family == "circle":
            curve["radius"] = self.radius
        elif self.family == "ellipse":
            curve.update(a=self.a, b=self.b)
        else:
            curve.update(c0=self.c0, coeffs=[list(p) for p in self.coeffs])
        if self.center is not None:
            curve["center"] = list(self.center)
        return {"surface": self.kind.value, "curve": curve}

    @classmethod
    def from_dict(cls, data: dict) -> "OvalSpec":
        unknown = set(data) - {"surface", "curve"}
        if unknown:
            raise UsageError(f"unknown keys in curve spec: {sorted(unknown)}")
        kind = SurfaceKind.parse(data.get("surface", ""))
        curve = dict(data.get("curve") or {})
        family = curve.pop("family", None)
        allowed = {
            "circle": {"radius", "center"},
            "ellipse": {"a", "b", "center"},
            "polar": {"c0", "coeffs", "center"},
        }
        if family not in allowed:
            raise UsageError(f"unknown curve family {family!r}")
        extra = set(curve) - allowed[family]
        if extra:
            raise UsageError(f"unknown keys for {family}: {sorted(extra)}")
        center = curve.pop("center", None)
        if family == "circle":
            return cls.circle(kind, curve["radius"], center)
        if family == "ellipse":
            if kind is not EUCLIDEAN:
                raise UsageError("the ellipse family is only defined on the Euclidean plane")
            return cls.ellipse(curve["a"], curve["b"], center)
        coeffs = [tuple(c) for c in curve.get("coeffs", [])]
        if any(len(c) != 2 for c in coeffs):
            raise UsageError("polar coeffs must be [a_j, b_j] pairs")
        return cls.polar(kind, curve["c0"], coeffs, center)


def _isometry(kind: SurfaceKind, center) -> np.ndarray:
    """Linear isometry of the ambient model taking the basepoint to ``center``."""
    if center is None:
        return np.eye(3)
    C = np.asarray(center, dtype=float)
    if kind is EUCLIDEAN:
        return np.array([[1.0, 0.0, C[0]], [0.0, 1.0, C[1]], [0.0, 0.0, 1.0]])
    phi = math.atan2(C[1], C[0])
    cp, sp = math.cos(phi), math.sin(phi)
    R = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    if kind is SPHERE:
        r = math.atan2(math.hypot(C[0], C[1]), C[2])
        B = np.array([[math.cos(r), 0.0, math.sin(r)], [0.0, 1.0, 0.0], [-math.sin(r), 0.0, math.cos(r)]])
    else:
        r = math.asinh(math.hypot(C[0], C[1]))
        B = np.array([[math.cosh(r), 0.0, math.sinh(r)], [0.0, 1.0, 0.0], [math.sinh(r), 0.0, math.cosh(r)]])
    return R @ B @ R.T


# ---------------------------------------------------------------------------
# parametric curves with analytic jets


class _PolarCurve:
    """``X(rho(t), t)`` in geodesic polar coordinates, mapped by an isometry."""

    def __init__(self, kind: SurfaceKind, c0: float, coeffs, center=None):
        self.kind = kind
        self.period = 2.0 * math.pi
        self.c0 = float(c0)
        self.coeffs = np.array(coeffs, dtype=float).reshape(-1, 2)
        self.j = np.arange(1, len(self.coeffs) + 1, dtype=float)
        self.M = _isometry(kind, center)

    def radius(self, t, order=0):
        """Radial function and its derivatives up to ``order``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = [np.full_like(t, self.c0)] + [np.zeros_like(t) for _ in range(order)]
        if len(self.coeffs):
            jt = np.outer(t, self.j)
            c, s = np.cos(jt), np.sin(jt)
            a, b = self.coeffs[:, 0], self.coeffs[:, 1]
            # d^n/dt^n of (a cos jt + b sin jt)
            for n in range(order + 1):
                jn = self.j ** n
                if n % 4 == 0:
                    term = a * c + b * s
                elif n % 4 == 1:
                    term = -a * s + b * c
                elif n % 4 == 2:
                    term = -(a * c + b * s)
                else:
                    term = a * s - b * c
                out[n] = out[n] + (term * jn).sum(axis=1)
        return out

    def _radial_parts(self, r):
        """Values and three derivatives of f(rho) and c(rho) for the chart."""
        kind = self.kind
        if kind is EUCLIDEAN:
            one, zero = np.ones_like(r), np.zeros_like(r)
            return (r, one, zero, zero), (one, zero, zero, zero)
        if kind is SPHERE:
            s, c = np.sin(r), np.cos(r)
            return (s, c, -s, -c), (c, -s, -c, s)
        sh, ch = np.sinh(r), np.cosh(r)
        return (sh, ch, sh, ch), (ch, sh, ch, sh)

    def jet(self, t, order=2):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        rho = self.radius(t, order)
        rho += [np.zeros_like(t)] * (3 - order)
        fd, cd = self._radial_parts(rho[0])

        def compose(g):
            # Faa di Bruno for (g o rho)^(n), n <= 3
            r1, r2, r3 = rho[1], rho[2], rho[3]
            return [
                g[0],
                g[1] * r1,
                g[2] * r1 ** 2 + g[1] * r2,
                g[3] * r1 ** 3 + 3.0 * g[2] * r1 * r2 + g[1] * r3,
            ]

        F = compose(fd)
        C = compose(cd)
        cos_d = [np.cos(t), -np.sin(t), -np.cos(t), np.sin(t)]
        sin_d = [np.sin(t), np.cos(t), -np.sin(t), -np.cos(t)]
        binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]]
        out = []
        for n in range(order + 1):
            x = sum(binom[n][k] * F[k] * cos_d[n - k] for k in range(n + 1))
            y = sum(binom[n][k] * F[k] * sin_d[n - k] for k in range(n + 1))
            out.append(np.stack([x, y, C[n]], axis=-1) @ self.M.T)
        return out

    def position(self, t: float) -> np.ndarray:
        """Scalar fast path of ``jet(t, 0)[0]``."""
        r = self.c0
        for j, (a, b) in enumerate(self.coeffs, start=1):
            r += a * math.cos(j * t) + b * math.sin(j * t)
        if self.kind is EUCLIDEAN:
            f, c = r, 1.0
        elif self.kind is SPHERE:
            f, c = math.sin(r), math.cos(r)
        else:
            f, c = math.sinh(r), math.cosh(r)
        return self.M @ np.array([f * math.cos(t), f * math.sin(t), c])

    def radius_range(self, n=4096):
        rho = self.radius(np.linspace(0.0, self.period, n, endpoint=False))[0]
        return float(rho.min()), float(rho.max())


class _EllipseCurve:
    def __init__(self, a: float, b: float, center=None):
        self.kind = EUCLIDEAN
        self.period = 2.0 * math.pi
        self.a, self.b = float(a), float(b)
        self.M = _isometry(EUCLIDEAN, center)

    def jet(self, t, order=2):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c, s = np.cos(t), np.sin(t)
        zero = np.zeros_like(t)
        rows = [
            (self.a * c, self.b * s, np.ones_like(t)),
            (-self.a * s, self.b * c, zero),
            (-self.a * c, -self.b * s, zero),
            (self.a * s, -self.b * c, zero),
        ]
        return [np.stack(rows[n], axis=-1) @ self.M.T for n in range(order + 1)]

    def position(self, t: float) -> np.ndarray:
        return self.M @ np.array([self.a * math.cos(t), self.b * math.sin(t), 1.0])


class _PerturbedCurve:
    """Normal perturbation of an oval, parameterized by the base arclength."""

    def __init__(self, base: "Oval", profile: "PerturbationProfile"):
        self.kind = base.kind
        self.base = base
        self.profile = profile
        self.period = base.length

    def jet(self, t, order=2):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if order >= 3:
            h = 1e-5 * max(1.0, self.period)
            lo = self.jet(t - h, 2)[2]
            hi = self.jet(t + h, 2)[2]
            return self.jet(t, 2) + [(hi - lo) / (2.0 * h)]
        kappa = self.kind.curvature
        G, T, N, k, dk = self.base._frame_arrays(t, with_dk=True)
        lam, dlam, ddlam = self.profile.evaluate(t)
        if self.kind is HYPERBOLIC and np.any(np.abs(lam) >= 1.0):
            raise DomainError("hyperbolic normal perturbation needs |lambda| < 1")
        G2 = -kappa * G + k[:, None] * N
        P0 = G + lam[:, None] * N
        P1 = (1.0 - lam * k)[:, None] * T + dlam[:, None] * N
        P2 = (
            (-2.0 * dlam * k - lam * dk)[:, None] * T
            + (1.0 - lam * k)[:, None] * G2
            + ddlam[:, None] * N
        )
        c = 1.0 / np.sqrt(1.0 + kappa * lam ** 2)
        c1 = -kappa * lam * dlam * c ** 3
        c2 = -kappa * (dlam ** 2 + lam * ddlam) * c ** 3 + 3.0 * kappa ** 2 * lam ** 2 * dlam ** 2 * c ** 5
        out = [c[:, None] * P0]
        if order >= 1:
            out.append(c1[:, None] * P0 + c[:, None] * P1)
        if order >= 2:
            out.append(c2[:, None] * P0 + 2.0 * c1[:, None] * P1 + c[:, None] * P2)
        return out


# ---------------------------------------------------------------------------
# the oval


@dataclass(frozen=True)
class FramedPoint:
    s: float
    point: SurfacePoint
    tangent: TangentVector
    normal: TangentVector
    curvature: float


@dataclass(frozen=True)
class OvalCertificate:
    """Grid scan of the hypotheses that make a closed curve an oval."""

    min_curvature: float
    is_simple: bool
    is_closed: bool
    is_regular: bool = True
    in_hemisphere: bool = True
    closure_gap: float = 0.0

    @property
    def ok(self) -> bool:
        return (
            self.min_curvature > 0.0
            and self.is_simple
            and self.is_closed
            and self.is_regular
            and self.in_hemisphere
        )

    def failures(self) -> list:
        out = []
        if not self.min_curvature > 0.0:
            out.append("positive_curvature")
        if not self.is_simple:
            out.append("simple")
        if not self.is_closed:
            out.append("closed")
        if not self.is_regular:
            out.append("regular")
        if not self.in_hemisphere:
            out.append("hemisphere")
        return out


class Oval:
    """Arclength-parameterized closed curve on a model surface.

    Immutable after construction. ``length`` is the total arclength ``l``;
    every accessor takes ``s`` modulo ``l``.
    """

    def __init__(self, kind: SurfaceKind, curve, resolution: int = DEFAULT_RESOLUTION,
                 spec: Optional[OvalSpec] = None, center: Optional[SurfacePoint] = None,
                 lineage: tuple = ()):
        if int(resolution) < MIN_RESOLUTION:
            raise UsageError(f"resolution must be >= {MIN_RESOLUTION}")
        self.kind = kind
        self.curve = curve
        self.resolution = int(resolution)
        self.spec = spec
        self.center = center if center is not None else SurfacePoint.basepoint(kind)
        self.lineage = lineage
        self.period = float(curve.period)
        self._omega = 2.0 * math.pi / self.period

        N = self.resolution
        self.t_grid = np.arange(N) * (self.period / N)
        jet = curve.jet(self.t_grid, 2)
        self._grid_jet = jet
        speed = np.sqrt(np.maximum(geo._inner(kind, jet[1], jet[1]), 0.0))
        self._grid_speed = speed
        coef = np.fft.rfft(speed) / N
        self.length = float(coef[0].real * self.period)
        # modes above the noise floor; the Nyquist bin is dropped
        mag = np.abs(coef[1:N // 2])
        keep = np.nonzero(mag > 1e-16 * abs(coef[0]))[0]
        K = int(keep[-1]) + 1 if len(keep) else 0
        self._modes = np.arange(1, K + 1, dtype=float)
        self._coef = 2.0 * coef[1:K + 1]
        self._spectral_tail = float(mag[-max(1, N // 16):].max()) if len(mag) else 0.0
        self._s0 = 0.0
        self._s0 = float(self.arclength(np.array([0.0]))[0])

        s_grid = self.arclength(np.append(self.t_grid, self.period))
        s_grid[-1] = self.length
        self.s_grid = s_grid[:-1]
        rem = np.append(self.t_grid, self.period) - (self.period / self.length) * s_grid
        rem[-1] = rem[0]
        self._t_spline = CubicSpline(s_grid, rem, bc_type="periodic")

    # -- arclength maps ------------------------------------------------------

    def arclength(self, t):
        """Arclength ``s(t)`` from the native parameter (not reduced mod ``l``)."""
        t = np.asarray(t, dtype=float)
        base = (self.length / self.period) * t
        if len(self._modes):
            ph = np.exp(1j * self._omega * np.multiply.outer(t, self._modes))
            base = base + (ph * (self._coef / (1j * self._omega * self._modes))).real.sum(axis=-1)
        return base - self._s0

    def param(self, s):
        """Native parameter ``t(s)``; ``s`` may be any real (lifted) value."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        wraps = np.floor(s / self.length)
        r = s - wraps * self.length
        t = (self.period / self.length) * r + self._t_spline(r)
        for _ in range(4):
            dt = (self.arclength(t) - r) / self._speed(t)
            t = t - dt
            if np.abs(dt).max() < 1e-15 * self.period:
                break
        return t + wraps * self.period

    def position_at_t(self, t: float) -> np.ndarray:
        fast = getattr(self.curve, "position", None)
        if fast is not None:
            return fast(t)
        return self.curve.jet(np.array([t]), 0)[0][0]

    def _speed(self, t):
        d1 = self.curve.jet(t, 1)[1]
        return np.sqrt(geo._inner(self.kind, d1, d1))

    def reduce(self, s):
        return np.mod(s, self.length)

    # -- frames --------------------------------------------------------------

    def _frame_from_t(self, t, with_dk=False):
        kind = self.kind
        jet = self.curve.jet(t, 3 if with_dk else 2)
        G, d1, d2 = jet[0], jet[1], jet[2]
        v2 = geo._inner(kind, d1, d1)
        v = np.sqrt(v2)
        T = d1 / v[:, None]
        N = geo._normal_rotate(kind, G, T)
        k = geo._inner(kind, d2, N) / v2
        if not with_dk:
            return G, T, N, k
        dk_dt = geo._inner(kind, jet[3], N) / v2 - 3.0 * k * geo._inner(kind, d1, d2) / v2
        return G, T, N, k, dk_dt / v

    def _frame_arrays(self, s, with_dk=False):
        return self._frame_from_t(self.param(s), with_dk)

    def positions(self, s):
        return self.curve.jet(self.param(s), 0)[0]

    def point(self, s) -> SurfacePoint:
        return SurfacePoint.from_array(self.kind, self.positions(s)[0])

    def frame_at(self, s) -> FramedPoint:
        G, T, N, k = self._frame_arrays(s)
        P = SurfacePoint.from_array(self.kind, G[0])
        return FramedPoint(
            s=float(self.reduce(s)),
            point=P,
            tangent=TangentVector(P, tuple(T[0])),
            normal=TangentVector(P, tuple(N[0])),
            curvature=float(k[0]),
        )

    def curvature(self, s):
        return self._frame_arrays(s)[3]

    def curvature_derivative(self, s):
        return self._frame_arrays(s, with_dk=True)[4]

    # -- dense tables --------------------------------------------------------

    @cached_property
    def dense_t(self) -> np.ndarray:
        M = 4 * self.resolution
        return np.arange(M) * (self.period / M)

    @cached_property
    def dense_positions(self) -> np.ndarray:
        return self.curve.jet(self.dense_t, 0)[0]

    @cached_property
    def grid_curvature(self) -> np.ndarray:
        G, d1, d2 = self._grid_jet
        v2 = self._grid_speed ** 2
        N = geo._normal_rotate(self.kind, G, d1 / self._grid_speed[:, None])
        return geo._inner(self.kind, d2, N) / v2

    # -- certificate ---------------------------------------------------------

    def certificate(self) -> OvalCertificate:
        G = self._grid_jet[0]
        kmin = float(self.grid_curvature.min())
        regular = bool(self._grid_speed.min() > 0.0)
        end = self.curve.jet(np.array([0.0, self.period]), 0)[0]
        gap = float(np.linalg.norm(end[0] - end[1]))
        closed = gap <= 1e-9
        hemi = True
        if self.kind is SPHERE:
            d = geo._distance(SPHERE, G, self.center.vec)
            hemi = bool(np.all(G[:, 2] > 0.0) and d.max() < math.pi / 2 - HEMISPHERE_MARGIN)
        return OvalCertificate(
            min_curvature=kmin,
            is_simple=_is_simple(self.kind, G),
            is_closed=closed,
            is_regular=regular,
            in_hemisphere=hemi,
            closure_gap=gap,
        )

    def validate(self):
        cert = self.certificate()
        if not cert.ok:
            raise InvalidOvalError(cert.failures()[0], f"certificate {cert}")
        return self

    # -- area ----------------------------------------------------------------

    def total_curvature(self) -> float:
        """Integral of k ds around the curve."""
        return float(np.mean(self.grid_curvature * self._grid_speed) * self.period)

    def enclosed_area(self) -> float:
        if self.kind is EUCLIDEAN:
            G, d1, _ = self._grid_jet
            integrand = G[:, 0] * d1[:, 1] - G[:, 1] * d1[:, 0]
            return float(0.5 * np.mean(integrand) * self.period)
        if self.kind is SPHERE:
            return 2.0 * math.pi - self.total_curvature()
        return self.total_curvature() - 2.0 * math.pi

    def __repr__(self):
        label = self.spec.family if self.spec else type(self.curve).__name__
        return f"Oval({self.kind.value}, {label}, l={self.length:.12g}, N={self.resolution})"


def _is_simple(kind: SurfaceKind, G: np.ndarray) -> bool:
    # gnomonic chart: geodesics become straight lines, so a polyline check is faithful
    xy = G[:, :2] / G[:, 2:3]
    return bool(LinearRing(xy).is_simple)


# ---------------------------------------------------------------------------
# public operations


def build_oval(spec: OvalSpec, resolution: int = DEFAULT_RESOLUTION, validate: bool = True) -> Oval:
    """Build and (by default) certify the oval described by ``spec``."""
    if int(resolution) < MIN_RESOLUTION:
        raise UsageError(f"resolution must be >= {MIN_RESOLUTION}")
    kind = spec.kind
    if spec.family == "ellipse":
        curve = _EllipseCurve(spec.a, spec.b, spec.center)
    else:
        c0 = spec.radius if spec.family == "circle" else spec.c0
        coeffs = spec.coeffs if spec.family == "polar" else ()
        curve = _PolarCurve(kind, c0, coeffs, spec.center)
        rmin, rmax = curve.radius_range(max(4096, 4 * int(resolution)))
        if validate and not rmin > 0.0:
            raise InvalidOvalError("positive_radius", f"radial function reaches {rmin:.6g}")
        if validate and kind is SPHERE and not rmax < math.pi / 2 - HEMISPHERE_MARGIN:
            raise InvalidOvalError("hemisphere", f"radial function reaches {rmax:.6g}")
    oval = Oval(kind, curve, resolution, spec=spec, center=spec.center_point)
    return oval.validate() if validate else oval


def frame_at(oval: Oval, s: float) -> FramedPoint:
    return oval.frame_at(s)


def geodesic_curvature(oval: Oval, s: float) -> float:
    return float(oval.curvature(s)[0])


def oval_certificate(oval: Oval) -> OvalCertificate:
    return oval.certificate()


def enclosed_area(oval: Oval) -> float:
    """Area of the region bounded by the oval (Green on the plane, Gauss-Bonnet otherwise)."""
    return oval.enclosed_area()


# ---------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class PerturbationProfile:
    """Smooth periodic normal displacement ``lambda(s)`` on ``R / l Z``.

    ``func`` maps an array of arclengths to ``(lam, dlam, ddlam)``.
    ``support`` is ``(start, end)`` measured along the curve, or ``None``
    for a profile that may be nonzero everywhere.
    """

    func: Callable
    length: float
    support: Optional[tuple] = None
    samples: int = field(default=20000, compare=False)

    def evaluate(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lam, d1, d2 = self.func(np.mod(s, self.length))
        shape = s.shape
        return (np.broadcast_to(lam, shape).astype(float),
                np.broadcast_to(d1, shape).astype(float),
                np.broadcast_to(d2, shape).astype(float))

    @cached_property
    def c2_norm(self) -> float:
        """``max_s max(|lam|, |lam'|, |lam''|)`` on a dense sample."""
        if self.support is None:
            s = np.linspace(0.0, self.length, self.samples, endpoint=False)
        else:
            a, b = self.support
            s = np.linspace(a, b, self.samples)
        return float(max(np.abs(v).max() for v in self.evaluate(s)))

    def scaled(self, factor: float) -> "PerturbationProfile":
        f = self.func
        return PerturbationProfile(
            lambda s: tuple(factor * np.asarray(v) for v in f(s)),
            self.length, self.support, self.samples,
        )


def constant_profile(oval: Oval, value: float) -> PerturbationProfile:
    def f(s):
        return (np.full_like(s, value), np.zeros_like(s), np.zeros_like(s))
    return PerturbationProfile(f, oval.length)


def fourier_profile(oval: Oval, amplitude: float, mode: int) -> PerturbationProfile:
    """``amplitude * cos(2 pi mode s / l)``."""
    w = 2.0 * math.pi * mode / oval.length

    def f(s):
        return (amplitude * np.cos(w * s), -amplitude * w * np.sin(w * s), -amplitude * w * w * np.cos(w * s))
    return PerturbationProfile(f, oval.length)


def _smoothstep(y):
    """``E(y) / (E(y) + E(1 - y))`` with ``E(y) = exp(-1/y)``, plus two derivatives."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)

    def E(x):
        safe = np.where(x > 0.0, x, 1.0)
        e = np.where(x > 0.0, np.exp(-1.0 / safe), 0.0)
        return e, e / safe ** 2, e * (1.0 / safe ** 4 - 2.0 / safe ** 3)

    e1, e1p, e1pp = E(y)
    e2, e2p, e2pp = E(1.0 - y)
    e2p, e2pp = -e2p, e2pp
    D = e1 + e2
    Dp = e1p + e2p
    Dpp = e1pp + e2pp
    S = e1 / D
    Sp = e1p / D - e1 * Dp / D ** 2
    Spp = e1pp / D - 2.0 * e1p * Dp / D ** 2 - e1 * Dpp / D ** 2 + 2.0 * e1 * Dp ** 2 / D ** 3
    return S, Sp, Spp


def bump_profile(oval: Oval, s0: float, width: float, amplitude: float) -> PerturbationProfile:
    """``amplitude (s - s0)^2`` times a plateau supported in ``(s0 - width/2, s0 + width/2)``.

    The plateau is 1 on the middle half of the support, so
    ``lam(s0) = lam'(s0) = 0`` and ``lam''(s0) = 2 amplitude``.
    """
    l = oval.length
    if not 0.0 < width < l:
        raise UsageError("bump width must lie in (0, l)")
    half, quarter = width / 2.0, width / 4.0

    def f(s):
        x = np.mod(s - s0 + l / 2.0, l) - l / 2.0
        r = np.abs(x)
        sgn = np.sign(x)
        S, Sp, Spp = _smoothstep((half - r) / quarter)
        inside = r < half
        q = np.where(inside, S, 0.0)
        dq = np.where(inside, -sgn * Sp / quarter, 0.0)
        ddq = np.where(inside, Spp / quarter ** 2, 0.0)
        lam = amplitude * x * x * q
        dlam = amplitude * (2.0 * x * q + x * x * dq)
        ddlam = amplitude * (2.0 * q + 4.0 * x * dq + x * x * ddq)
        return lam, dlam, ddlam

    return PerturbationProfile(f, l, support=(s0 - half, s0 + half))


def normal_perturbation(oval: Oval, profile: PerturbationProfile, validate: bool = True) -> Oval:
    """Push the oval along its normal by ``lambda(s)`` and re-project onto the surface."""
    if abs(profile.length - oval.length) > 1e-9 * max(1.0, oval.length):
        raise UsageError("profile was built for a curve of different length")
    if oval.kind is HYPERBOLIC:
        lam = profile.evaluate(np.linspace(0.0, oval.length, 4 * oval.resolution, endpoint=False))[0]
        if np.abs(lam).max() >= 1.0:
            raise DomainError("hyperbolic normal perturbation needs |lambda| < 1")
    curve = _PerturbedCurve(oval, profile)
    new = Oval(oval.kind, curve, oval.resolution, spec=oval.spec, center=oval.center,
               lineage=oval.lineage + (profile,))
    return new.validate() if validate else new
