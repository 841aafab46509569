"""Classical gyromagnet picture: dS/dt = S x B on the unit sphere and the
canonical chart S = (sqrt(1-q^2) cos p, sqrt(1-q^2) sin p, -q).

S is always evolved by conjugating with the quantum propagator, which keeps
|S| = 1 exactly and makes the two pictures agree by construction.  The
Runge-Kutta integrator here is a test oracle only.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .fields import FieldSpec, check_unit, evaluate_field
from .propagator import StepControl, propagator, rotation_from_su2, sample_propagators

POLE_TOL = 1e-12


class CanonicalPoint(NamedTuple):
    q: float
    p: float

    @property
    def at_pole(self):
        return 1.0 - abs(self.q) <= POLE_TOL


def evolve_bloch(spec: FieldSpec, S0, t0: float, t1: float, ctrl: StepControl | None = None) -> np.ndarray:
    """S(t1) = R(U) S0 with U the refined propagator from t0 to t1."""
    S0 = check_unit(S0)
    return rotation_from_su2(propagator(spec, t0, t1, ctrl)) @ S0


def bloch_trajectory(spec: FieldSpec, S0, t0: float, dt: float, n_samples: int, ctrl: StepControl | None = None):
    """Times and Bloch vectors at t0 + i dt, shape (n_samples + 1, 3)."""
    S0 = check_unit(S0)
    R = rotation_from_su2(sample_propagators(spec, t0, dt, n_samples, ctrl))
    return t0 + dt * np.arange(n_samples + 1), R @ S0


def bloch_rhs(spec: FieldSpec, t, S):
    return np.cross(S, evaluate_field(spec, t))


def evolve_bloch_rk4(spec: FieldSpec, S0, t0: float, t1: float, n_steps: int) -> np.ndarray:
    """Classical RK4 for dS/dt = S x B.  Not structure preserving; oracle use only."""
    S = np.array(S0, dtype=float)
    h = (t1 - t0) / n_steps
    for j in range(n_steps):
        t = t0 + j * h
        k1 = bloch_rhs(spec, t, S)
        k2 = bloch_rhs(spec, t + 0.5 * h, S + 0.5 * h * k1)
        k3 = bloch_rhs(spec, t + 0.5 * h, S + 0.5 * h * k2)
        k4 = bloch_rhs(spec, t + h, S + h * k3)
        S = S + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return S


# -- canonical chart ---------------------------------------------------------


def canonical_from_bloch(S) -> CanonicalPoint:
    """q = -Sz, p = atan2(Sy, Sx); p is set to 0 at the poles."""
    S = np.asarray(S, dtype=float)
    q = min(1.0, max(-1.0, -float(S[2])))
    if 1.0 - abs(q) <= POLE_TOL or (S[0] == 0.0 and S[1] == 0.0):
        return CanonicalPoint(q, 0.0)
    p = math.atan2(float(S[1]), float(S[0]))
    return CanonicalPoint(q, math.pi if p == -math.pi else p)


def canonical_arrays(S):
    """Vectorized chart for a stack of Bloch vectors; returns (q, p, pole_mask)."""
    S = np.asarray(S, dtype=float)
    q = np.clip(-S[..., 2], -1.0, 1.0)
    pole = 1.0 - np.abs(q) <= POLE_TOL
    p = np.arctan2(S[..., 1], S[..., 0])
    p = np.where(p == -np.pi, np.pi, p)
    p = np.where(pole, 0.0, p)
    return q, p, pole


def bloch_from_canonical(c) -> np.ndarray:
    q, p = c
    if not -1.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [-1, 1], got {q!r}")
    r = math.sqrt(1.0 - q * q)
    return np.array([r * math.cos(p), r * math.sin(p), -q])


def state_from_canonical(c) -> np.ndarray:
    """Spinor sqrt((1-q)/2) |+> + sqrt((1+q)/2) e^{ip} |->; p is the relative phase."""
    q, p = c
    if not -1.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [-1, 1], got {q!r}")
    return np.array([math.sqrt(0.5 * (1.0 - q)), math.sqrt(0.5 * (1.0 + q)) * complex(math.cos(p), math.sin(p))])


def canonical_energy(spec: FieldSpec, t: float, c) -> float:
    """Energy -B.S written in (q, p): -(Bx cos p + By sin p) sqrt(1-q^2) + Bz q.

    The sign of the Bz term follows from Sz = -q.
    """
    q, p = c
    Bx, By, Bz = evaluate_field(spec, t)
    return float(-(Bx * math.cos(p) + By * math.sin(p)) * math.sqrt(max(0.0, 1.0 - q * q)) + Bz * q)


def canonical_rhs(spec: FieldSpec, t: float, c):
    """(dq/dt, dp/dt) in the chart; singular at q = +-1."""
    q, p = c
    Bx, By, Bz = evaluate_field(spec, t)
    r = math.sqrt(1.0 - q * q)
    qdot = (Bx * math.sin(p) - By * math.cos(p)) * r
    pdot = -(Bx * math.cos(p) + By * math.sin(p)) * q / r - Bz
    return qdot, pdot
