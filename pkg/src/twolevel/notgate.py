"""Unitary NOT operations: detection along simulated trajectories, the
resonance schedule for the rotating field, and the numerical search for
NRzDrive parameters that satisfy the analogous resonance with gamma.

A NOT occurs at t when |<psi0|psi(t)>|^2 = 0, equivalently S(t) = -S(0),
since 2 |<psi1|psi2>|^2 = 1 + S1.S2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .bloch import CanonicalPoint, state_from_canonical
from .errors import AccuracyError, BracketError, ConfigError, DegenerateFitError, ResonanceError
from .fields import FieldSpec, evaluate_field
from .propagator import StepControl, bloch_from_spinor, check_spinor, propagate, trajectory
from .stroboscope import gamma_of_field

__all__ = [
    "NotEvent",
    "ResonanceSolution",
    "detect_not",
    "detect_not_many",
    "nr_not_search",
    "overlap_identity",
    "r_not_schedule",
    "resonance_residual",
    "state_from_canonical",
]

DEFAULT_THRESHOLD = 1e-3
CANDIDATE_CEILING = 0.05


def overlap_identity(psi1, psi2):
    """Both sides of 2 |<psi1|psi2>|^2 = 1 + S1.S2."""
    psi1, psi2 = check_spinor(psi1), check_spinor(psi2)
    lhs = 2.0 * abs(np.vdot(psi1, psi2)) ** 2
    rhs = 1.0 + float(bloch_from_spinor(psi1) @ bloch_from_spinor(psi2))
    return lhs, rhs


def resonance_residual(B0, B1, frequency):
    """f^2 - B0^2 - (B1 - f/2)^2; zero at resonance."""
    return frequency**2 - B0**2 - (B1 - 0.5 * frequency) ** 2


@dataclass
class ResonanceSolution:
    omega_drive: float
    B0: float
    B1: float
    gamma: float
    predicted_t_not: list
    residual: float = 0.0
    universality: str = ""
    iterations: list = field(default_factory=list)

    def report(self) -> str:
        lines = [
            f"omega     {self.omega_drive:.17g}",
            f"B1        {self.B1:.17g}",
            f"B0        {self.B0:.17g}",
            f"gamma     {self.gamma:.17g}",
            f"residual  {self.residual:.17g}",
            "t_not     " + " ".join(f"{t:.17g}" for t in self.predicted_t_not),
        ]
        if self.universality:
            lines.append(f"class     {self.universality}")
        return "\n".join(lines) + "\n"


def _schedule(omega, n_events):
    return [(2 * n + 1) * math.pi / omega for n in range(n_events)]


def r_not_schedule(B0: float, B1: float, omega: float, n_events: int = 5, tol: float = 1e-9) -> ResonanceSolution:
    """NOT instants (2n+1) pi / omega for the resonant rotating field.

    Valid for initial states with q0 = 0 and any p0.  Raises
    ResonanceError when omega^2 != B0^2 + (B1 - omega/2)^2.
    """
    res = resonance_residual(B0, B1, omega)
    if abs(res) > tol:
        raise ResonanceError(f"rotating field is off resonance (residual {res:.6g})", residual=res)
    return ResonanceSolution(omega, B0, B1, omega, _schedule(omega, n_events), res, "q0 = 0, p0 arbitrary")


@dataclass
class NotEvent:
    t_not: float
    fidelity_to_orthogonal: float
    initial: CanonicalPoint

    @property
    def min_overlap(self) -> float:
        return 1.0 - self.fidelity_to_orthogonal


def _scan_step(spec, samples_per_period):
    T = spec.reference_period
    if T is None:
        # constant field: resolve its precession period
        b = float(np.linalg.norm(evaluate_field(spec, 0.0)))
        T = 2.0 * math.pi / b if b > 0 else 1.0
    return T / samples_per_period


def detect_not(
    spec: FieldSpec,
    c0,
    horizon: float,
    threshold: float = DEFAULT_THRESHOLD,
    samples_per_period: int = 200,
    ctrl: StepControl | None = None,
) -> list:
    """NOT events within [0, horizon] for the initial state at ``c0``.

    The overlap |<psi0|psi(t)>|^2 is sampled on a uniform grid; each local
    minimum below ``CANDIDATE_CEILING`` is refined by golden-section search
    and kept when the refined overlap is at most ``threshold``.
    """
    if not 0.0 < threshold <= 0.05:
        raise ConfigError(f"threshold must lie in (0, 0.05], got {threshold!r}")
    if samples_per_period < 200:
        raise ConfigError("need at least 200 samples per period")
    c0 = CanonicalPoint(*c0)
    psi0 = state_from_canonical(c0)
    dt = _scan_step(spec, samples_per_period)
    n = max(2, math.ceil(horizon / dt))
    dt = horizon / n
    times, psi = trajectory(spec, psi0, 0.0, dt, n, ctrl)
    ov = np.abs(psi @ np.conj(psi0)) ** 2

    def overlap(t):
        return abs(np.vdot(psi0, propagate(spec, psi0, 0.0, max(0.0, t), ctrl))) ** 2

    events = []
    ceiling = max(threshold, CANDIDATE_CEILING)
    for i in range(1, n):
        if not (ov[i] <= ov[i - 1] and ov[i] < ov[i + 1] and ov[i] <= ceiling):
            continue
        a, b, c = times[i - 1], times[i], times[i + 1]
        res = minimize_scalar(overlap, bracket=(a, b, c), method="golden", tol=1e-10 / max(1.0, 2.0 * b))
        t_best, f_best = float(res.x), float(res.fun)
        if f_best > ov[i]:
            t_best, f_best = float(b), float(ov[i])
        if f_best <= threshold:
            events.append(NotEvent(t_best, 1.0 - f_best, c0))
    events.sort(key=lambda e: e.t_not)
    return events


def detect_not_many(spec: FieldSpec, initials, horizon: float, threads: int = 1, **kw) -> list:
    """detect_not for each initial condition; results in input order."""
    work = lambda c0: detect_not(spec, c0, horizon, **kw)  # noqa: E731
    initials = list(initials)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(work, initials))
    return [work(c) for c in initials]


def nr_not_search(
    omega: float,
    B1: float,
    B0_bracket=(0.5, 2.0),
    fit_c0=(0.5, 0.0),
    fit_periods: int = 300,
    ctrl: StepControl | None = None,
    residual_tol: float = 1e-4,
    xtol: float = 1e-4,
    n_predicted: int = 5,
    field_kind: str = "NRzDrive",
    max_iter: int = 200,
) -> ResonanceSolution:
    """Find B0 with gamma(B0)^2 = B0^2 + (B1 - gamma(B0)/2)^2.

    gamma(B0) is fitted from one strobe series of the field started at
    ``fit_c0`` and run for ``fit_periods`` periods.  The outer solve bisects
    the bracket until |residual| <= ``residual_tol`` and the bracket is no
    wider than ``xtol``; the best evaluated point is returned.  Predicted
    NOT instants are odd multiples of pi / omega (the drive frequency).
    ``field_kind`` may be set to "Rotating" to run the same pipeline where
    gamma = omega.
    """
    if field_kind not in ("NRzDrive", "Rotating"):
        raise ConfigError(f"unsupported field kind {field_kind!r}")
    lo, hi = map(float, B0_bracket)
    if not 0 < lo < hi:
        raise ConfigError(f"bad B0 bracket {B0_bracket!r}")
    make = FieldSpec.nrz_drive if field_kind == "NRzDrive" else FieldSpec.rotating
    iterations = []
    cache = {}

    def gamma_at(B0):
        if B0 not in cache:
            try:
                cache[B0] = gamma_of_field(make(B0, B1, omega), fit_c0, fit_periods, ctrl).gamma
            except DegenerateFitError as exc:
                raise DegenerateFitError(f"gamma fit degenerate at B0 = {B0!r}: {exc}") from exc
        return cache[B0]

    def residual(B0):
        g = gamma_at(B0)
        r = resonance_residual(B0, B1, g)
        iterations.append((B0, g, r))
        return r

    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo != 0.0 and r_hi != 0.0 and np.sign(r_lo) == np.sign(r_hi):
        raise BracketError(f"no sign change of the resonance residual on [{lo}, {hi}] ({r_lo:.4g}, {r_hi:.4g})")
    best = min(((lo, r_lo), (hi, r_hi)), key=lambda x: abs(x[1]))
    while best[1] != 0.0 and not (abs(best[1]) <= residual_tol and hi - lo <= xtol):
        if len(iterations) > max_iter:
            raise AccuracyError(
                f"resonance search did not converge (|r| = {abs(best[1]):.3g}, width {hi - lo:.3g})",
                achieved=abs(best[1]),
            )
        mid = 0.5 * (lo + hi)
        r_mid = residual(mid)
        if abs(r_mid) < abs(best[1]):
            best = (mid, r_mid)
        if np.sign(r_mid) == np.sign(r_lo):
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
    root, r = best
    g = gamma_at(root)
    universality = "p0 = pi/2, q0 arbitrary" if field_kind == "NRzDrive" else "q0 = 0, p0 arbitrary"
    return ResonanceSolution(omega, root, B1, g, _schedule(omega, n_predicted), r, universality, iterations)
