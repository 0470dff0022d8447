"""The billiard map on the open cylinder and its generating function.

Conventions. The working generating function is the positive chord length
``h(s0, s1) = d_S(Gamma(s0), Gamma(s1))``, so that

    dh/ds0 = -cos psi0,    dh/ds1 = cos psi1,

and ``h01 = sin psi0 sin psi1 / D(d) > 0`` (``D`` is ``d``, ``sin d`` or
``sinh d``). The action module uses ``g = -h``. ``psi`` is measured from the
positively oriented tangent toward the inward normal, so a counterclockwise
boundary gives ``psi`` in ``(0, pi)`` for every chord.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import geometry as geo
from .errors import DegenerateChordError, DomainError, SolverError, WhisperOrbitError
from .geometry import SurfacePoint, TangentVector
from .oval import Oval

PSI_MIN = 1e-6
DEFLATION = 1e-7


@dataclass(frozen=True)
class PhasePoint:
    s: float
    psi: float

    def __post_init__(self):
        if not 0.0 < self.psi < math.pi:
            raise DomainError(f"psi must lie in (0, pi), got {self.psi!r}")

    def flipped(self) -> "PhasePoint":
        """The involution ``(s, psi) -> (s, pi - psi)``."""
        return PhasePoint(self.s, math.pi - self.psi)


@dataclass(frozen=True)
class MomentumPoint:
    s: float
    p: float

    def __post_init__(self):
        if not -1.0 < self.p < 1.0:
            raise DomainError(f"momentum must lie in (-1, 1), got {self.p!r}")


@dataclass(frozen=True)
class ChordData:
    d: float
    psi0: float
    psi1: float
    tau0: TangentVector
    tau1: TangentVector


@dataclass(frozen=True)
class GenFunHessian:
    h00: float
    h01: float
    h11: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.h00, self.h01], [self.h01, self.h11]])


@dataclass(frozen=True)
class JacobianMatrix:
    a: float  # ds1/ds0
    b: float  # ds1/dpsi0
    c: float  # dpsi1/ds0
    e: float  # dpsi1/dpsi0

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.e]])

    @property
    def det(self) -> float:
        return self.a * self.e - self.b * self.c


def to_momentum(x: PhasePoint) -> MomentumPoint:
    return MomentumPoint(x.s, -math.cos(x.psi))


def from_momentum(m: MomentumPoint) -> PhasePoint:
    if not -1.0 < m.p < 1.0:
        raise DomainError(f"momentum must lie in (-1, 1), got {m.p!r}")
    return PhasePoint(m.s, math.acos(-m.p))


def wrap_delta(ds, length):
    """Signed difference reduced to ``[-l/2, l/2)``."""
    return np.mod(np.asarray(ds) + length / 2.0, length) - length / 2.0


# ---------------------------------------------------------------------------
# chord quantities, vectorized over pairs


def chord_arrays(oval: Oval, s0, s1) -> dict:
    """Chord data for arrays of arclength pairs.

    Returns a dict of arrays: ``d``, ``psi0``, ``psi1``, their sines and
    cosines, the endpoint curvatures ``k0``, ``k1`` and the ambient frames.
    """
    kind = oval.kind
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    s1 = np.atleast_1d(np.asarray(s1, dtype=float))
    G0, T0, N0, k0 = oval._frame_arrays(s0)
    G1, T1, N1, k1 = oval._frame_arrays(s1)
    d = geo._distance(kind, G0, G1)
    if np.any(d <= geo.COINCIDENT_TOL):
        raise DegenerateChordError("chord endpoints coincide")
    tau0 = geo._tangent_toward(kind, G0, G1)
    tau1 = -geo._tangent_toward(kind, G1, G0)
    c0 = geo._inner(kind, T0, tau0)
    n0 = geo._inner(kind, N0, tau0)
    c1 = geo._inner(kind, T1, tau1)
    n1 = -geo._inner(kind, N1, tau1)
    # renormalize (c, n) pairs; both are unit up to rounding
    r0 = np.hypot(c0, n0)
    r1 = np.hypot(c1, n1)
    return dict(
        d=d, k0=k0, k1=k1,
        cos0=c0 / r0, sin0=n0 / r0, cos1=c1 / r1, sin1=n1 / r1,
        psi0=np.arctan2(n0, c0), psi1=np.arctan2(n1, c1),
        G0=G0, G1=G1, tau0=tau0, tau1=tau1,
    )


def hessian_arrays(oval: Oval, ch: dict):
    """``(h00, h01, h11)`` arrays for chords from :func:`chord_arrays`."""
    kind = oval.kind
    d = ch["d"]
    S = geo._sin_like(kind, d)
    C = geo._cos_like(kind, d)
    sin0, sin1 = ch["sin0"], ch["sin1"]
    h00 = sin0 ** 2 * C / S - ch["k0"] * sin0
    h11 = sin1 ** 2 * C / S - ch["k1"] * sin1
    h01 = sin0 * sin1 / S
    return h00, h01, h11


def chord(oval: Oval, s0: float, s1: float) -> ChordData:
    ch = chord_arrays(oval, s0, s1)
    P0 = SurfacePoint.from_array(oval.kind, ch["G0"][0])
    P1 = SurfacePoint.from_array(oval.kind, ch["G1"][0])
    return ChordData(
        d=float(ch["d"][0]),
        psi0=float(ch["psi0"][0]),
        psi1=float(ch["psi1"][0]),
        tau0=TangentVector(P0, tuple(ch["tau0"][0])),
        tau1=TangentVector(P1, tuple(ch["tau1"][0])),
    )


def gen_derivs(oval: Oval, s0: float, s1: float) -> tuple:
    """``(dh/ds0, dh/ds1) = (-cos psi0, cos psi1)`` for ``h = +d_S``."""
    ch = chord_arrays(oval, s0, s1)
    return float(-ch["cos0"][0]), float(ch["cos1"][0])


def gen_hessian(oval: Oval, s0: float, s1: float) -> GenFunHessian:
    h00, h01, h11 = hessian_arrays(oval, chord_arrays(oval, s0, s1))
    return GenFunHessian(float(h00[0]), float(h01[0]), float(h11[0]))


# ---------------------------------------------------------------------------
# the map


def _check_psi(psi: float):
    if not PSI_MIN <= psi <= math.pi - PSI_MIN:
        raise WhisperOrbitError(f"psi = {psi!r} is within {PSI_MIN} of the cylinder boundary")


def _shoot(oval: Oval, s0: float, psi0: float):
    """Next impact of the geodesic leaving ``Gamma(s0)`` at angle ``psi0``.

    The shot geodesic is the surface's intersection with the plane spanned by
    ``Gamma(s0)`` and the launch direction ``u``; curve points on it are the
    zeros of ``det(gamma(t), Gamma(s0), u)``. The residual is scanned on the
    dense table in chord order, the first sign change after ``s0`` is
    bracketed, and Brent's method polishes the root.
    """
    kind = oval.kind
    P = oval.period
    t0 = float(oval.param(s0)[0])
    G0, d1 = oval.curve.jet(np.array([t0]), 1)
    G0, d1 = G0[0], d1[0]
    speed0 = math.sqrt(float(geo._inner(kind, d1, d1)))
    T0 = d1 / speed0
    N0 = geo._normal_rotate(kind, G0, T0)
    u = math.cos(psi0) * T0 + math.sin(psi0) * N0
    nvec = np.cross(G0, u)

    def f(t):
        return float(oval.position_at_t(t) @ nvec)

    dt = DEFLATION / speed0
    ta, tb = t0 + dt, t0 + P - dt
    M = len(oval.dense_t)
    step = P / M
    # dense samples strictly inside (ta, tb), in chord order
    j0 = int(math.floor(ta / step)) + 1
    n_in = int(math.ceil(tb / step)) - j0
    shift = j0 % M
    f_all = oval.dense_positions @ nvec
    fs = np.concatenate((f_all[shift:], f_all[:shift]))[:n_in]
    ts = (j0 + np.arange(n_in)) * step
    ts = np.concatenate(([ta], ts, [tb]))
    fs = np.concatenate(([f(ta)], fs, [f(tb)]))
    sg = np.sign(fs)
    change = np.nonzero(sg[:-1] * sg[1:] <= 0.0)[0]
    if len(change) == 0:
        raise SolverError(f"no return to the boundary found from s={s0!r}, psi={psi0!r}")
    i = int(change[0])
    # the table and the scalar evaluator may disagree in the last bit when the
    # root sits on a sample, so the bracket is re-checked and widened if needed
    lo, hi = i, i + 1
    fa, fb = f(ts[lo]), f(ts[hi])
    while fa * fb > 0.0 and (lo > 0 or hi < len(ts) - 1):
        if abs(fa) < abs(fb) and lo > 0:
            lo -= 1
            fa = f(ts[lo])
        elif hi < len(ts) - 1:
            hi += 1
            fb = f(ts[hi])
        else:
            lo -= 1
            fa = f(ts[lo])
    if fa == 0.0:
        t1 = float(ts[lo])
    elif fb == 0.0:
        t1 = float(ts[hi])
    elif fa * fb > 0.0:
        raise SolverError(f"root bracketing failed from s={s0!r}, psi={psi0!r}")
    else:
        try:
            t1 = brentq(f, ts[lo], ts[hi], xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise SolverError(f"root polishing failed from s={s0!r}, psi={psi0!r}: {exc}") from exc
    G1, T1, N1, _ = oval._frame_from_t(np.array([t1 % P]))
    G1, T1, N1 = G1[0], T1[0], N1[0]
    d = float(geo._distance(kind, G0, G1))
    tau1 = geo._geodesic_velocity(kind, G0, u, d)
    psi1 = math.atan2(-float(geo._inner(kind, N1, tau1)), float(geo._inner(kind, T1, tau1)))
    if not 0.0 < psi1 < math.pi:
        raise SolverError(f"outgoing angle {psi1!r} left (0, pi); the curve may not be convex")
    s1 = float(oval.reduce(oval.arclength(np.array([t1 % P]))[0]))
    return s1, psi1


def next_impact(oval: Oval, x: PhasePoint) -> PhasePoint:
    """The billiard map ``T(s0, psi0) = (s1, psi1)``."""
    _check_psi(x.psi)
    s1, psi1 = _shoot(oval, float(oval.reduce(x.s)), x.psi)
    return PhasePoint(s1, psi1)


def inverse_map(oval: Oval, x: PhasePoint) -> PhasePoint:
    """``T^-1 = I o T o I`` with ``I(s, psi) = (s, pi - psi)``."""
    return next_impact(oval, x.flipped()).flipped()


def iterate(oval: Oval, x: PhasePoint, n: int) -> list:
    """``[x, T x, ..., T^n x]``."""
    if n < 0:
        raise DomainError("n must be >= 0")
    out = [PhasePoint(float(oval.reduce(x.s)), x.psi)]
    for i in range(n):
        try:
            out.append(next_impact(oval, out[-1]))
        except (SolverError, WhisperOrbitError) as exc:
            raise type(exc)(f"iterate {i + 1}: {exc}") from exc
    return out


def dt_from_chord(oval: Oval, s0: float, s1: float) -> JacobianMatrix:
    """Jacobian of the map at the phase point whose chord runs from ``s0`` to ``s1``."""
    ch = chord_arrays(oval, s0, s1)
    h00, h01, h11 = (float(v[0]) for v in hessian_arrays(oval, ch))
    sin0, sin1 = float(ch["sin0"][0]), float(ch["sin1"][0])
    return JacobianMatrix(
        a=-h00 / h01,
        b=sin0 / h01,
        c=(h00 * h11 - h01 * h01) / (h01 * sin1),
        e=-h11 * sin0 / (h01 * sin1),
    )


def dt_matrix(oval: Oval, x: PhasePoint) -> JacobianMatrix:
    """Closed-form ``DT`` obtained by differentiating the generating relations."""
    y = next_impact(oval, x)
    return dt_from_chord(oval, x.s, y.s)
