"""Periodic orbits through the action on the n-torus.

The action of a configuration ``s_0 < s_1 < ... < s_{n-1} < s_0 + m l`` is
``W = sum_i g(s_i, s_{i+1})`` with ``g = -d_S`` (closing with ``s_n = s_0``),
and its critical points are the periodic billiard trajectories.

Birkhoff orbits are searched on the slices ``s_0 = const``: for each ``s_0``
on a grid the remaining vertices minimize ``W`` (maximize the perimeter),
which gives a smooth profile ``F(s_0)`` whose critical points are exactly the
critical points of ``W``. Minima of ``F`` are minima of ``W``; maxima of
``F`` are the minimax orbits. Sign changes of ``F'(s_0) = dW/ds_0`` are
bracketed and polished, then refined by Newton's method on the full
gradient.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .billiard import (
    PhasePoint,
    chord_arrays,
    dt_from_chord,
    hessian_arrays,
    next_impact,
    wrap_delta,
)
from .errors import ConvergenceError, DomainError, TwistDegeneracyError, UsageError
from .geometry import SPHERE
from .oval import Oval, bump_profile, normal_perturbation

log = logging.getLogger(__name__)

MIN_SEPARATION = 1e-7
PARABOLIC_BAND = 1e-8
NEWTON_TOL = 1e-11
STRIP_SLACK = 1e-9


@dataclass(frozen=True)
class Configuration:
    """Lifted vertex arclengths of a candidate ``(m, n)`` orbit."""

    n: int
    m: int
    s: tuple

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        if len(self.s) != self.n:
            raise UsageError(f"expected {self.n} vertices, got {len(self.s)}")
        if self.n < 2 or not 0 < self.m < self.n:
            raise UsageError(f"need n >= 2 and 0 < m < n, got (m, n) = ({self.m}, {self.n})")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.s)

    def with_s(self, s) -> "Configuration":
        return Configuration(self.n, self.m, tuple(s))

    @classmethod
    def uniform(cls, oval: Oval, m: int, n: int, s0: float = 0.0) -> "Configuration":
        return cls(n, m, tuple(s0 + i * m * oval.length / n for i in range(n)))


def _gaps(oval: Oval, s: np.ndarray, m: int) -> np.ndarray:
    return np.diff(np.append(s, s[0] + m * oval.length))


def _check(oval: Oval, config: Configuration):
    g = _gaps(oval, config.array, config.m)
    if np.any(g < MIN_SEPARATION):
        raise DomainError("configuration touches the collision set (consecutive vertices coincide)")


def _ordered(oval: Oval, s: np.ndarray, m: int) -> bool:
    return bool(np.all(_gaps(oval, s, m) > MIN_SEPARATION))


def _pairs(oval: Oval, s: np.ndarray, m: int):
    return s, np.append(s[1:], s[0] + m * oval.length)


# ---------------------------------------------------------------------------
# action and its derivatives


def action(oval: Oval, config) -> float:
    """``W = -sum of chord lengths`` around the closed configuration."""
    if not isinstance(config, Configuration):
        raise UsageError("action expects a Configuration")
    _check(oval, config)
    a, b = _pairs(oval, config.array, config.m)
    from .geometry import _distance
    return float(-_distance(oval.kind, oval.positions(a), oval.positions(b)).sum())


def _action_raw(oval: Oval, s, m: int) -> float:
    """Action of a raw lifted vector (for finite-difference oracles)."""
    from .geometry import _distance
    a, b = _pairs(oval, np.asarray(s, dtype=float), m)
    return float(-_distance(oval.kind, oval.positions(a), oval.positions(b)).sum())


def _grad_from_chords(ch: dict) -> np.ndarray:
    # dW/ds_i = cos psi_i(out) - cos psi_i(in)
    return ch["cos0"] - np.roll(ch["cos1"], 1)


def action_gradient(oval: Oval, config: Configuration) -> np.ndarray:
    _check(oval, config)
    ch = chord_arrays(oval, *_pairs(oval, config.array, config.m))
    return _grad_from_chords(ch)


@dataclass(frozen=True)
class CyclicHessian:
    """Hessian of ``W``: cyclic tridiagonal with couplings ``b_i = d2g/ds_i ds_{i+1}``."""

    matrix: np.ndarray
    diagonal: np.ndarray
    b: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def _hessian_from_chords(oval: Oval, ch: dict) -> CyclicHessian:
    h00, h01, h11 = hessian_arrays(oval, ch)
    n = len(h00)
    diag = -(h00 + np.roll(h11, 1))
    b = -h01
    H = np.zeros((n, n))
    H[np.arange(n), np.arange(n)] = diag
    for i in range(n):
        j = (i + 1) % n
        H[i, j] += b[i]
        H[j, i] += b[i]
    return CyclicHessian(H, diag, b)


def action_hessian(oval: Oval, config: Configuration) -> CyclicHessian:
    _check(oval, config)
    ch = chord_arrays(oval, *_pairs(oval, config.array, config.m))
    return _hessian_from_chords(oval, ch)


# ---------------------------------------------------------------------------
# Newton refinement


def _newton_step(H: np.ndarray, grad: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(H)
    scale = max(np.abs(w).max(), 1e-300)
    if np.abs(w).min() < 1e-10 * scale:
        # flat direction (e.g. a rotational family): minimum-norm step
        return -np.linalg.lstsq(H, grad, rcond=1e-10)[0]
    return -np.linalg.solve(H, grad)


def newton_refine(oval: Oval, config: Configuration, tol: float = NEWTON_TOL,
                  max_iter: int = 100) -> Configuration:
    """Solve ``grad W = 0`` by Newton's method, keeping the cyclic order."""
    _check(oval, config)
    s = config.array.copy()
    m = config.m
    ch = chord_arrays(oval, *_pairs(oval, s, m))
    grad = _grad_from_chords(ch)
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            return config.with_s(s)
        H = _hessian_from_chords(oval, ch).matrix
        try:
            step = _newton_step(H, grad)
        except np.linalg.LinAlgError:
            step = -grad
        alpha = 1.0
        for _ in range(40):
            trial = s + alpha * step
            if _ordered(oval, trial, m):
                ch_t = chord_arrays(oval, *_pairs(oval, trial, m))
                g_t = _grad_from_chords(ch_t)
                if np.linalg.norm(g_t) < gnorm or alpha < 1e-3:
                    break
            alpha *= 0.5
        else:
            raise ConvergenceError("could not find an order-preserving Newton step")
        s, ch, grad = trial, ch_t, g_t
    gnorm = float(np.linalg.norm(grad))
    if gnorm < tol:
        return config.with_s(s)
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (|grad W| = {gnorm:.3g})")


# ---------------------------------------------------------------------------
# stability


def classify(trace: float, band: float = PARABOLIC_BAND) -> tuple:
    """``(class, nondegenerate)`` from the trace of ``DT^n``."""
    a = abs(trace)
    if a > 2.0 + band:
        return "hyperbolic", True
    if a < 2.0 - band:
        return "elliptic", True
    return "parabolic", False


@dataclass
class PeriodicOrbit:
    config: Configuration
    phase_points: list
    trace: float
    product: np.ndarray
    hessian_det: float
    b: np.ndarray
    stability: str
    residual: float
    closure_residual: float
    degenerate: bool = False
    family: bool = False
    residue_lhs: float = float("nan")
    residue_rhs: float = float("nan")
    notes: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def psi(self) -> list:
        return [x.psi for x in self.phase_points]

    @property
    def action(self) -> float:
        return self._action

    @property
    def residue_discrepancy(self) -> float:
        return abs(self.residue_lhs - self.residue_rhs) / max(1.0, abs(self.residue_lhs))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "s": [x.s for x in self.phase_points],
            "psi": self.psi,
            "trace": self.trace,
            "hessian_det": self.hessian_det,
            "class": self.stability,
            "residue_lhs": self.residue_lhs,
            "residue_rhs": self.residue_rhs,
            "degenerate": self.degenerate,
            "family": self.family,
            "gradient_norm": self.residual,
            "closure_residual": self.closure_residual,
            "action": self._action,
            "star_polygon": self.m > 1,
        }


def dt_product(oval: Oval, config: Configuration):
    """Ordered product ``DT(x_{n-1}) ... DT(x_0)`` and the individual factors."""
    s = config.array
    a, b = _pairs(oval, s, config.m)
    mats = [dt_from_chord(oval, a[i], b[i]) for i in range(config.n)]
    M = np.eye(2)
    for J in mats:
        M = J.matrix @ M
    return M, mats


def closure_residual(oval: Oval, phase_points: list) -> float:
    """Largest mismatch between ``T(x_i)`` and ``x_{i+1}`` around the orbit."""
    worst = 0.0
    n = len(phase_points)
    for i, x in enumerate(phase_points):
        y = next_impact(oval, x)
        z = phase_points[(i + 1) % n]
        worst = max(worst, abs(float(wrap_delta(y.s - z.s, oval.length))), abs(y.psi - z.psi))
    return worst


def make_orbit(oval: Oval, config: Configuration, family: bool = False) -> PeriodicOrbit:
    """Assemble phase points, trace, Hessian data and residue for a critical configuration."""
    _check(oval, config)
    a, b = _pairs(oval, config.array, config.m)
    ch = chord_arrays(oval, a, b)
    pts = [PhasePoint(float(oval.reduce(si)), float(p)) for si, p in zip(a, ch["psi0"])]
    M, _ = dt_product(oval, config)
    tr = float(np.trace(M))
    hess = _hessian_from_chords(oval, ch)
    det_h = hess.det
    grad = float(np.linalg.norm(_grad_from_chords(ch)))
    stab, nondeg = classify(tr)
    orbit = PeriodicOrbit(
        config=config,
        phase_points=pts,
        trace=tr,
        product=M,
        hessian_det=det_h,
        b=hess.b,
        stability=stab,
        residual=grad,
        closure_residual=closure_residual(oval, pts),
        degenerate=(not nondeg) or family,
        family=family,
    )
    orbit._action = float(-ch["d"].sum())
    try:
        lhs, rhs = mackay_meiss_residue(oval, orbit)
        orbit.residue_lhs, orbit.residue_rhs = lhs, rhs
    except TwistDegeneracyError as exc:
        orbit.notes.append(str(exc))
    if config.m > 1:
        orbit.notes.append("star polygon (m > 1): strip bound taken from the simple-polygon reduction")
    return orbit


def orbit_trace(oval: Oval, orbit: PeriodicOrbit) -> float:
    M, _ = dt_product(oval, orbit.config)
    orbit.product = M
    orbit.trace = float(np.trace(M))
    return orbit.trace


def mackay_meiss_residue(oval: Oval, orbit: PeriodicOrbit) -> tuple:
    """Both sides of ``2 - tr DT^n = (-1)^(n+1) det H / prod b_i``."""
    hess = action_hessian(oval, orbit.config)
    if np.any(np.abs(hess.b) < 1e-12):
        raise TwistDegeneracyError("a mixed derivative b_i vanishes")
    n = orbit.config.n
    lhs = 2.0 - orbit_trace(oval, orbit)
    rhs = (-1.0) ** (n + 1) * hess.det / float(np.prod(hess.b))
    return lhs, rhs


# ---------------------------------------------------------------------------
# compact strip


@dataclass(frozen=True)
class StripBound:
    n: int
    delta: float
    m0: Optional[int] = None
    area: Optional[float] = None


def strip_bound(oval: Oval, n: int, rule: str = "standard") -> StripBound:
    """Angle ``delta_n`` such that every n-orbit has a point with psi in ``[delta_n, pi - delta_n]``.

    On the plane and the hyperbolic plane Gauss-Bonnet bounds the interior
    angles ``zeta_i = pi - 2 psi_i`` of the inscribed polygon by
    ``sum zeta_i <= (n - 2) pi``, so some ``psi_i >= pi / n``.

    On the sphere ``delta_n = pi / m0`` where ``m0 > n`` is the least integer
    with ``m0 > q pi n / (2 pi - A)``, ``A`` the enclosed area. ``rule="standard"``
    uses ``q = 1``. Gauss-Bonnet for the inscribed polygon actually reads
    ``A_P = 2 pi - 2 sum psi_i``, which only supports ``q = 2``; that version
    is ``rule="gauss-bonnet"``.
    """
    if n < 2:
        raise UsageError("n must be >= 2")
    if rule not in ("standard", "gauss-bonnet"):
        raise UsageError(f"unknown strip rule {rule!r}")
    if oval.kind is not SPHERE:
        return StripBound(n, math.pi / n)
    A = oval.enclosed_area()
    if not A < 2.0 * math.pi:
        raise DomainError(f"enclosed area {A} is not below 2 pi")
    q = 1.0 if rule == "standard" else 2.0
    m0 = max(n, math.floor(q * math.pi * n / (2.0 * math.pi - A))) + 1
    return StripBound(n, math.pi / m0, m0=m0, area=A)


def strip_check(orbit: PeriodicOrbit, bound: StripBound) -> bool:
    lo = bound.delta - STRIP_SLACK
    hi = math.pi - bound.delta + STRIP_SLACK
    # on a billiard polygon psi_i = (pi - zeta_i) / 2 <= pi / 2, so the
    # largest angle is the one the strip bound constrains
    return lo <= max(orbit.psi) <= hi


# ---------------------------------------------------------------------------
# Birkhoff search


def _slice_min(oval: Oval, s: np.ndarray, m: int, tol: float = 1e-13, max_iter: int = 60):
    """Minimize W over ``s[1:]`` with ``s[0]`` fixed. Returns ``(s, chords)``."""
    s = s.copy()
    ch = chord_arrays(oval, *_pairs(oval, s, m))
    W = -ch["d"].sum()
    for _ in range(max_iter):
        g = _grad_from_chords(ch)[1:]
        if np.linalg.norm(g) < tol:
            break
        H = _hessian_from_chords(oval, ch).matrix[1:, 1:]
        w, V = np.linalg.eigh(H)
        # positive-definite modification keeps the step a descent direction
        w = np.maximum(np.abs(w), 1e-8 * max(1.0, np.abs(w).max()))
        step = -(V @ ((V.T @ g) / w))
        trial = s.copy()
        trial[1:] += step
        if np.linalg.norm(g) < 1e-6 and _ordered(oval, trial, m):
            # quadratic regime: W is flat to rounding, so judge by the gradient
            ch_t = chord_arrays(oval, *_pairs(oval, trial, m))
            if np.linalg.norm(_grad_from_chords(ch_t)[1:]) >= np.linalg.norm(g):
                break
            s, ch, W = trial, ch_t, -ch_t["d"].sum()
            continue
        alpha = 1.0
        for _ in range(50):
            trial = s.copy()
            trial[1:] += alpha * step
            if _ordered(oval, trial, m):
                ch_t = chord_arrays(oval, *_pairs(oval, trial, m))
                W_t = -ch_t["d"].sum()
                if W_t <= W + 1e-4 * alpha * float(g @ step):
                    break
            alpha *= 0.5
        else:
            break
        s, ch, W = trial, ch_t, W_t
    return s, ch


def _same_orbit(oval: Oval, a: PeriodicOrbit, b: PeriodicOrbit, tol: float) -> bool:
    if a.n != b.n or a.m != b.m:
        return False
    l = oval.length
    x = np.sort(np.mod(a.config.array, l))
    y = np.sort(np.mod(b.config.array, l))
    for k in range(a.n):
        if np.all(np.abs(wrap_delta(x - np.roll(y, k), l)) < tol):
            return True
    return False


@dataclass
class SearchResult:
    orbits: list
    diagnostics: dict

    def __iter__(self):
        return iter(self.orbits)

    def __len__(self):
        return len(self.orbits)

    @property
    def family(self) -> bool:
        return bool(self.diagnostics.get("family"))

    @property
    def distinct_found(self) -> int:
        """Distinct closed orbits actually computed, family witnesses included."""
        return len(self.orbits) + len(self.diagnostics.get("family_witnesses", []))


def find_birkhoff(oval: Oval, m: int, n: int, seeds: int = 16, seed: int = 0,
                  dedup_tol: float = 1e-6, family_tol: float = 1e-9) -> SearchResult:
    """Search for distinct Birkhoff orbits of type ``(m, n)``.

    ``seeds`` is the number of slice positions ``s_0`` (offset by a jitter
    drawn from ``seed``). Orbits equal up to cyclic shift or reversal are
    merged; a rotational family (every slice critical) is reported as one
    representative flagged ``family``.
    """
    if math.gcd(m, n) != 1 or not 0 < m < n:
        raise UsageError(f"need gcd(m, n) = 1 and 0 < m < n, got ({m}, {n})")
    if seeds < 2:
        raise UsageError("seeds must be >= 2")
    l = oval.length
    rng = np.random.default_rng(seed)
    offset = float(rng.uniform(0.0, 1.0))
    h = l / seeds
    grid = (np.arange(seeds) + offset) * h
    base = np.arange(n) * (m * l / n)

    slices, F, G = [], [], []
    s = grid[0] + base
    for s0 in grid:
        s = s - s[0] + s0 if slices else s
        s, ch = _slice_min(oval, s, m)
        slices.append(s.copy())
        F.append(-ch["d"].sum())
        G.append(float(_grad_from_chords(ch)[0]))
    F, G = np.array(F), np.array(G)
    diag = {"seeds": seeds, "offset": offset, "slice_action": F.tolist(), "slice_gradient": G.tolist(),
            "candidates": 0, "failures": 0}

    found: list = []

    def add(cfg: Configuration, family: bool = False):
        orbit = make_orbit(oval, cfg, family=family)
        if any(_same_orbit(oval, orbit, o, dedup_tol) for o in found):
            return
        found.append(orbit)

    if np.abs(G).max() < family_tol and np.ptp(F) < family_tol:
        # every slice is critical: one representative, plus a second member
        # of the family kept as evidence that it is a genuine continuum
        diag["family"] = True
        diag["family_witnesses"] = []
        for j in range(seeds):
            try:
                cfg = newton_refine(oval, Configuration(n, m, tuple(slices[j])))
            except ConvergenceError as exc:
                diag["failures"] += 1
                log.debug("family member %d failed: %s", j, exc)
                continue
            if not found:
                add(cfg, family=True)
                continue
            w = make_orbit(oval, cfg, family=True)
            if not _same_orbit(oval, w, found[0], dedup_tol):
                diag["family_witnesses"].append(w.to_dict())
                break
        return SearchResult(found, diag)
    diag["family"] = False

    def slice_grad(s0, warm):
        sw = warm - warm[0] + s0
        sw, ch = _slice_min(oval, sw, m)
        return float(_grad_from_chords(ch)[0]), sw

    for j in range(seeds):
        k = (j + 1) % seeds
        ga, gb = G[j], G[k]
        if ga * gb > 0.0:
            continue
        diag["candidates"] += 1
        a = grid[j]
        b = grid[k] if k else grid[0] + l
        warm = slices[j]
        if ga == 0.0:
            root = a
        elif gb == 0.0:
            root = b
        else:
            try:
                root = brentq(lambda x: slice_grad(x, warm)[0], a, b, xtol=1e-14, rtol=1e-14, maxiter=100)
            except (ValueError, RuntimeError) as exc:
                diag["failures"] += 1
                log.debug("bracket %d failed: %s", j, exc)
                continue
        _, sw = slice_grad(root, warm)
        try:
            cfg = newton_refine(oval, Configuration(n, m, tuple(sw)))
        except (ConvergenceError, DomainError) as exc:
            diag["failures"] += 1
            log.debug("newton from bracket %d failed: %s", j, exc)
            continue
        add(cfg)
    found.sort(key=lambda o: (o.action, float(np.min(np.mod(o.config.array, l)))))
    return SearchResult(found, diag)


# ---------------------------------------------------------------------------
# degeneracy breaking


@dataclass
class DegeneracyBreak:
    new_oval: Oval
    old_trace: float
    new_trace: float
    orbit_residual: float
    gradient_norm: float
    c2_norm: float
    vertex: float
    new_orbit: PeriodicOrbit

    @property
    def moved_off(self) -> bool:
        return abs(abs(self.new_trace) - 2.0) > PARABOLIC_BAND

    def to_dict(self) -> dict:
        return {
            "old_trace": self.old_trace,
            "new_trace": self.new_trace,
            "trace_shift": self.new_trace - self.old_trace,
            "orbit_residual": self.orbit_residual,
            "gradient_norm": self.gradient_norm,
            "lambda_c2_norm": self.c2_norm,
            "vertex": self.vertex,
            "new_class": self.new_orbit.stability,
            "moved_off_pm2": self.moved_off,
        }


def break_degeneracy(oval: Oval, orbit: PeriodicOrbit, width: float, amplitude: float,
                     vertex: int = 0) -> DegeneracyBreak:
    """Bend the boundary near one vertex without moving the orbit.

    The bump has ``lambda = lambda' = 0`` at the vertex, so the vertex and its
    tangent (hence the whole polygon) survive, while ``lambda'' != 0`` changes
    the curvature there and with it the trace of ``DT^n``.
    """
    l = oval.length
    s = orbit.config.array
    sv = float(s[vertex])
    others = np.delete(np.mod(s, l), vertex)
    if len(others) and np.any(np.abs(wrap_delta(others - sv, l)) < width / 2.0):
        raise UsageError("bump support contains another orbit vertex")
    profile = bump_profile(oval, sv, width, amplitude)
    new = normal_perturbation(oval, profile)
    # the perturbed curve is parameterized by the old arclength
    sigma = new.arclength(s)
    cfg = Configuration(orbit.n, orbit.m, tuple(sigma))
    new_orbit = make_orbit(new, cfg)
    return DegeneracyBreak(
        new_oval=new,
        old_trace=orbit.trace,
        new_trace=new_orbit.trace,
        orbit_residual=new_orbit.closure_residual,
        gradient_norm=new_orbit.residual,
        c2_norm=profile.c2_norm,
        vertex=sv,
        new_orbit=new_orbit,
    )
