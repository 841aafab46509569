"""Integrability diagnostics.

* the Bloch-sphere distance D = |S1 - S2| and its conservation under a
  common field,
* a Benettin-style finite-time Lyapunov exponent,
* error scans of the rotating-wave approximation against the exact
  plane-polarized evolution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .fields import FieldSpec, check_unit
from .propagator import (
    NORM_TOL,
    StepControl,
    check_spinor,
    rotation_from_su2,
    sample_propagators,
    trajectory,
)

SHORT_HORIZON_PERIODS = 100


def distance(S1, S2) -> float:
    return float(np.linalg.norm(np.asarray(S1, dtype=float) - np.asarray(S2, dtype=float)))


def distance_trace_form(rho1, rho2) -> float:
    """sqrt(2 Tr (rho1 - rho2)^2), equal to |S1 - S2| for pure states."""
    d = np.asarray(rho1) - np.asarray(rho2)
    return math.sqrt(max(0.0, 2.0 * float(np.real(np.trace(d @ d)))))


@dataclass
class DistanceSeries:
    times: np.ndarray
    D: np.ndarray

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.D.tolist()))

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.D - self.D[0])))


def distance_conservation_run(
    spec: FieldSpec, S1, S2, horizon: float, samples_per_period: int = 1, ctrl: StepControl | None = None
) -> DistanceSeries:
    """Evolve two Bloch vectors under the same field and record D(t).

    Samples are taken ``samples_per_period`` times per reference period
    (for a constant field, per unit time).
    """
    S1, S2 = check_unit(S1), check_unit(S2)
    if not horizon > 0:
        raise DomainError("horizon must be > 0")
    T = spec.reference_period or 1.0
    dt = T / samples_per_period
    n = max(1, math.ceil(horizon / dt - 1e-9))
    R = rotation_from_su2(sample_propagators(spec, 0.0, dt, n, ctrl))
    D = np.linalg.norm(R @ S1 - R @ S2, axis=-1)
    return DistanceSeries(dt * np.arange(n + 1), D)


@dataclass
class LyapunovEstimate:
    lam: float
    horizon: float
    initial_separation: float
    renormalization_interval: float
    n_renormalizations: int
    short_horizon: bool = False
    log_stretch: np.ndarray = field(default=None, repr=False)


def _tangent_unit(S, v):
    """Unit vector along the component of ``v`` tangent to the sphere at ``S``."""
    t = v - (v @ S) * S
    n = np.linalg.norm(t)
    if n == 0.0:
        axis = np.eye(3)[int(np.argmin(np.abs(S)))]
        t = np.cross(S, axis)
        n = np.linalg.norm(t)
    return t / n


def _displace(S, u, d0):
    """Point on the sphere at chord distance d0 from S along tangent direction u."""
    alpha = 2.0 * math.asin(0.5 * d0)
    return math.cos(alpha) * S + math.sin(alpha) * u


def lyapunov_estimate(
    spec: FieldSpec,
    S0,
    d0: float = 1e-8,
    horizon: float | None = None,
    renorm_dt: float | None = None,
    ctrl: StepControl | None = None,
) -> LyapunovEstimate:
    """Finite-time, finite-separation approximation of the largest Lyapunov exponent.

    A displaced copy of the trajectory is kept at chord distance ``d0`` by
    renormalizing every ``renorm_dt`` along the current separation
    direction; the exponent is the accumulated sum of ln(D/d0) divided by
    the elapsed time.  Defaults: one reference period between
    renormalizations and a horizon of 10^4 periods.
    """
    S0 = check_unit(S0)
    if not 1e-9 <= d0 <= 1e-4:
        raise DomainError(f"d0 must lie in [1e-9, 1e-4], got {d0!r}")
    T = spec.reference_period or 1.0
    renorm_dt = renorm_dt or T
    horizon = horizon or 1e4 * T
    n = max(1, round(horizon / renorm_dt))
    C = sample_propagators(spec, 0.0, renorm_dt, n, ctrl)
    steps = C[1:] @ np.conj(np.swapaxes(C[:-1], -1, -2))
    R = rotation_from_su2(steps)

    u0 = _tangent_unit(S0, np.cross(S0, np.eye(3)[int(np.argmin(np.abs(S0)))]))
    Sf, Sd = S0, _displace(S0, u0, d0)
    logs = np.empty(n)
    for i in range(n):
        Sf = R[i] @ Sf
        Sd = R[i] @ Sd
        diff = Sd - Sf
        logs[i] = math.log(np.linalg.norm(diff) / d0)
        Sd = _displace(Sf, _tangent_unit(Sf, diff), d0)
    elapsed = n * renorm_dt
    short = elapsed < SHORT_HORIZON_PERIODS * T
    if short:
        warnings.warn(f"Lyapunov horizon shorter than {SHORT_HORIZON_PERIODS} periods", RuntimeWarning, stacklevel=2)
    return LyapunovEstimate(float(logs.sum() / elapsed), elapsed, d0, renorm_dt, n, short, logs)


# -- rotating-wave approximation ---------------------------------------------


@dataclass
class RwaErrorScan:
    B2T: float
    times: np.ndarray
    err: np.ndarray
    err_phase_insensitive: np.ndarray

    @property
    def rows(self):
        return [(self.B2T, t, e) for t, e in zip(self.times.tolist(), self.err.tolist())]

    @property
    def max_error(self) -> float:
        return float(self.err.max())


def rwa_states(B2, omega, psi0, times):
    """Vectorized RWA spinors exp(-i w t sz/2) exp(-i B2 t sx/2) psi0."""
    t = np.asarray(times, dtype=float)
    c, s = np.cos(0.5 * B2 * t), np.sin(0.5 * B2 * t)
    a = c * psi0[0] - 1j * s * psi0[1]
    b = -1j * s * psi0[0] + c * psi0[1]
    ph = 0.5 * omega * t
    return np.stack([np.exp(-1j * ph) * a, np.exp(1j * ph) * b], axis=-1)


def rwa_error_scan(
    B2: float,
    B3: float,
    omega: float,
    psi0,
    horizon_mode: str = "scaled_t",
    c: float = 1.0,
    horizon: float | None = None,
    samples_per_period: int = 32,
    allow_off_resonance: bool = False,
    ctrl: StepControl | None = None,
) -> RwaErrorScan:
    """Compare the exact NRxDrive(B2, B3, omega) spinor with the RWA spinor.

    ``scaled_t`` runs to c / (B2 T) periods, i.e. t = c / B2; ``fixed_t``
    runs to the explicit ``horizon``.  Off resonance (omega != 2 B3) is
    refused unless ``allow_off_resonance`` is set.
    """
    psi0 = check_spinor(psi0, NORM_TOL)
    if not omega > 0:
        raise ConfigError("omega must be > 0")
    if abs(omega - 2.0 * B3) > 1e-9 * max(1.0, omega) and not allow_off_resonance:
        raise ConfigError(f"off resonance: omega = {omega!r}, 2 B3 = {2 * B3!r}")
    T = 2.0 * math.pi / omega
    if horizon_mode == "scaled_t":
        if B2 != 0.0:
            t_max = c / abs(B2)
        elif horizon is not None:
            t_max = horizon
        else:
            t_max = c * T
    elif horizon_mode == "fixed_t":
        if horizon is None or not horizon > 0:
            raise ConfigError("fixed_t mode needs a positive horizon")
        t_max = horizon
    else:
        raise ConfigError(f"unknown horizon_mode {horizon_mode!r}")
    dt = T / samples_per_period
    n = max(1, math.ceil(t_max / dt - 1e-9))
    times, psi_nr = trajectory(FieldSpec.nrx_drive(B2, B3, omega), psi0, 0.0, dt, n, ctrl)
    psi_r = rwa_states(B2, omega, psi0, times)
    err = np.linalg.norm(psi_r - psi_nr, axis=-1)
    ov = np.abs(np.sum(np.conj(psi_r) * psi_nr, axis=-1))
    err_pi = np.sqrt(np.maximum(0.0, 2.0 - 2.0 * ov))
    return RwaErrorScan(B2 * T, times, err, err_pi)


@dataclass
class RwaScaling:
    alpha: float
    prefactor: float
    B2T: np.ndarray
    max_errors: np.ndarray
    scans: list


def fit_rwa_exponent(B2T_values, B3: float, psi0, omega: float | None = None, c: float = 1.0, **kw) -> RwaScaling:
    """Fit max error ~ prefactor * (B2 T)^alpha over a ladder of couplings at resonance."""
    omega = 2.0 * B3 if omega is None else omega
    T = 2.0 * math.pi / omega
    vals = np.asarray(B2T_values, dtype=float)
    scans = [rwa_error_scan(x / T, B3, omega, psi0, "scaled_t", c, **kw) for x in vals]
    errs = np.array([s.max_error for s in scans])
    alpha, logc = np.polyfit(np.log(vals), np.log(errs), 1)
    return RwaScaling(float(alpha), float(math.exp(logc)), vals, errs, scans)
