"""Finite-difference oracles.

These only call :func:`geometry._distance`, the curve positions and
:func:`billiard.next_impact`; none of them touches the closed-form
derivative code they are meant to check.
"""
from __future__ import annotations

import numpy as np

from . import geometry as geo
from .billiard import PhasePoint, next_impact, wrap_delta
from .oval import Oval

FIRST_STEP = 1e-6
SECOND_STEP = 1e-4


def _dist(oval: Oval, s0, s1):
    return geo._distance(oval.kind, oval.positions(s0), oval.positions(s1))


def fd_gen_derivs(oval: Oval, s0, s1, step=None):
    """Central differences of ``d_S(Gamma(s0), Gamma(s1))``; vectorized."""
    h = FIRST_STEP * max(1.0, oval.length) if step is None else step
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    s1 = np.atleast_1d(np.asarray(s1, dtype=float))
    d0 = (_dist(oval, s0 + h, s1) - _dist(oval, s0 - h, s1)) / (2 * h)
    d1 = (_dist(oval, s0, s1 + h) - _dist(oval, s0, s1 - h)) / (2 * h)
    return d0, d1


def fd_gen_hessian(oval: Oval, s0, s1, step=None):
    """Second-order central differences of the chord length; vectorized."""
    h = SECOND_STEP * max(1.0, oval.length) if step is None else step
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    s1 = np.atleast_1d(np.asarray(s1, dtype=float))
    mid = _dist(oval, s0, s1)
    h00 = (_dist(oval, s0 + h, s1) - 2 * mid + _dist(oval, s0 - h, s1)) / h ** 2
    h11 = (_dist(oval, s0, s1 + h) - 2 * mid + _dist(oval, s0, s1 - h)) / h ** 2
    h01 = (
        _dist(oval, s0 + h, s1 + h) - _dist(oval, s0 + h, s1 - h)
        - _dist(oval, s0 - h, s1 + h) + _dist(oval, s0 - h, s1 - h)
    ) / (4 * h ** 2)
    return h00, h01, h11


def fd_jacobian(oval: Oval, x: PhasePoint, step=None) -> np.ndarray:
    """Central-difference Jacobian of ``next_impact`` in ``(s, psi)``."""
    l = oval.length
    hs = FIRST_STEP * max(1.0, l) if step is None else step
    hp = FIRST_STEP if step is None else step
    cols = []
    for ds, dp, h in ((hs, 0.0, hs), (0.0, hp, hp)):
        plus = next_impact(oval, PhasePoint(x.s + ds, x.psi + dp))
        minus = next_impact(oval, PhasePoint(x.s - ds, x.psi - dp))
        cols.append([
            float(wrap_delta(plus.s - minus.s, l)) / (2 * h),
            (plus.psi - minus.psi) / (2 * h),
        ])
    return np.array(cols).T


def fd_action_gradient(action, oval: Oval, s, step=None) -> np.ndarray:
    h = FIRST_STEP * max(1.0, oval.length) if step is None else step
    s = np.asarray(s, dtype=float)
    out = np.empty(len(s))
    for i in range(len(s)):
        e = np.zeros(len(s))
        e[i] = h
        out[i] = (action(oval, s + e) - action(oval, s - e)) / (2 * h)
    return out


def fd_action_hessian(action, oval: Oval, s, step=None) -> np.ndarray:
    h = SECOND_STEP * max(1.0, oval.length) if step is None else step
    s = np.asarray(s, dtype=float)
    n = len(s)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            v = (
                action(oval, s + ei + ej) - action(oval, s + ei - ej)
                - action(oval, s - ei + ej) + action(oval, s - ei - ej)
            ) / (4 * h * h)
            H[i, j] = H[j, i] = v
    return H


def brute_force_next_impact(oval: Oval, x: PhasePoint, samples: int = 4096) -> PhasePoint:
    """Next impact by scanning the outgoing chord angle over ``s1``.

    The angle at ``Gamma(s0)`` of the chord toward ``Gamma(s1)`` grows
    monotonically from 0 to pi as ``s1`` runs once around the oval, so the
    target ``s1`` is where it crosses ``psi0``. Found by a dense scan and
    bisection; uses none of the plane-intersection machinery.
    """
    l = oval.length
    s0 = float(oval.reduce(x.s))
    P0 = oval.positions(np.array([s0]))
    G0, T0, N0, _ = oval._frame_arrays(np.array([s0]))

    def angle(s1):
        s1 = np.atleast_1d(np.asarray(s1, dtype=float))
        G1 = oval.positions(s1)
        tau = geo._tangent_toward(oval.kind, np.broadcast_to(P0, G1.shape), G1)
        return np.arctan2(geo._inner(oval.kind, N0, tau), geo._inner(oval.kind, T0, tau))

    grid = s0 + l * (np.arange(1, samples) / samples)
    r = angle(grid) - x.psi
    i = int(np.nonzero(r >= 0.0)[0][0])
    lo = grid[i - 1] if i > 0 else s0 + 1e-9 * l
    hi = grid[i]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if angle(mid)[0] >= x.psi:
            hi = mid
        else:
            lo = mid
    s1 = 0.5 * (lo + hi)
    G1, T1, N1, _ = oval._frame_arrays(np.array([s1]))
    tau1 = -geo._tangent_toward(oval.kind, G1, np.broadcast_to(P0, G1.shape))
    psi1 = float(np.arctan2(-geo._inner(oval.kind, N1, tau1), geo._inner(oval.kind, T1, tau1))[0])
    return PhasePoint(float(oval.reduce(s1)), psi1)
