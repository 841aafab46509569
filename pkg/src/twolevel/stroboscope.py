"""Stroboscopic maps at t_k = k T and the contour laws they follow.

For the rotating field the strobe points lie on level sets of the
autonomous rotating-frame energy

    K(q, p) = 2 B0 sqrt(1 - q^2) cos p - 2 (B1 - omega/2) q.

For the NRzDrive field the strobe energies obey H_k = E - gamma q_k, with
gamma found by least squares, and the points lie on the same law with
omega replaced by gamma.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bloch import CanonicalPoint, bloch_from_canonical, canonical_arrays, state_from_canonical
from .errors import ConfigError, DegenerateFitError
from .fields import FieldSpec, evaluate_field
from .propagator import (
    StepControl,
    bloch_from_spinor,
    propagator,
    rotation_from_su2,
    su2_exponential,
    trajectory,
)

STROBE_CONTROL = StepControl(tolerance=1e-12)
VAR_FLOOR = 1e-12


@dataclass
class StrobeSeries:
    k: np.ndarray
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    H: np.ndarray
    pole: np.ndarray
    spec: FieldSpec
    initial: CanonicalPoint

    def __len__(self):
        return self.k.size

    @property
    def n_distinct(self) -> int:
        """Distinct strobe points at 1e-9 resolution."""
        pts = np.round(np.column_stack([self.q, self.p]), 9)
        return int(np.unique(pts, axis=0).shape[0])

    @property
    def suspected_periodic(self) -> bool:
        # a rational rotation number revisits a finite point set
        return self.n_distinct < len(self)


def strobe_energy(spec: FieldSpec, q, p, t=0.0):
    """Vectorized canonical energy -(Bx cos p + By sin p) sqrt(1-q^2) + Bz q."""
    Bx, By, Bz = evaluate_field(spec, t)
    q = np.asarray(q, dtype=float)
    return -(Bx * np.cos(p) + By * np.sin(p)) * np.sqrt(np.maximum(0.0, 1.0 - q * q)) + Bz * q


def _strobe_period(spec, period):
    if spec.is_periodic:
        return spec.period
    if spec.kind == "Constant" and period is not None and period > 0:
        return float(period)
    raise ConfigError("stroboscopic sampling needs a periodic field (or a Constant field with an explicit period)")


def period_propagator(spec: FieldSpec, period=None, ctrl: StepControl | None = None):
    """Single-period propagator from t = 0 (the monodromy operator)."""
    T = _strobe_period(spec, period)
    if spec.kind == "Constant":
        return su2_exponential(evaluate_field(spec, 0.0), T)
    return propagator(spec, 0.0, T, ctrl or STROBE_CONTROL)


def _series_from(spec, c0, n_periods, T, R):
    S = np.empty((n_periods + 1, 3))
    S[0] = bloch_from_canonical(c0)
    for k in range(n_periods):
        S[k + 1] = R @ S[k]
    q, p, pole = canonical_arrays(S)
    k = np.arange(n_periods + 1)
    return StrobeSeries(k, k * T, q, p, strobe_energy(spec, q, p), pole, spec, CanonicalPoint(*c0))


def strobe_trajectory(
    spec: FieldSpec, c0, n_periods: int, ctrl: StepControl | None = None, period=None
) -> StrobeSeries:
    """Strobe samples (k, t_k, q_k, p_k, H_k), k = 0..n_periods, from (q0, p0) = c0.

    The monodromy is computed once; its rotation is applied period by
    period.  Samples at a pole are flagged and gauged to p = 0.
    """
    if n_periods < 1:
        raise ConfigError("n_periods must be >= 1")
    T = _strobe_period(spec, period)
    R = rotation_from_su2(period_propagator(spec, period, ctrl))
    return _series_from(spec, c0, int(n_periods), T, R)


def default_grid(n: int = 20, q_min: float = -0.95, q_max: float = 0.95, p0: float = 0.0):
    """Initial conditions on the p = p0 line with uniformly spaced q."""
    if n <= 0:
        return []
    return [CanonicalPoint(float(q), p0) for q in np.linspace(q_min, q_max, n)]


def strobe_map(
    spec: FieldSpec, grid, n_periods: int, ctrl: StepControl | None = None, period=None, threads: int = 1
) -> list:
    """strobe_trajectory for every initial condition in ``grid``, in grid order."""
    grid = list(grid)
    if not grid:
        return []
    T = _strobe_period(spec, period)
    R = rotation_from_su2(period_propagator(spec, period, ctrl))
    work = lambda c0: _series_from(spec, c0, int(n_periods), T, R)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(work, grid))
    return [work(c0) for c0 in grid]


# -- gamma fit ---------------------------------------------------------------


@dataclass
class GammaFit:
    gamma: float
    intercept: float
    residual_rms: float
    r_squared: float
    n_points: int

    def report(self) -> str:
        return (
            f"gamma        {self.gamma:.17g}\n"
            f"intercept    {self.intercept:.17g}\n"
            f"r_squared    {self.r_squared:.17g}\n"
            f"residual_rms {self.residual_rms:.17g}\n"
            f"n_points     {self.n_points}\n"
        )


def fit_gamma(series: StrobeSeries, min_points: int = 10) -> GammaFit:
    """Ordinary least squares of H_k on q_k; gamma is minus the slope."""
    q, H = np.asarray(series.q), np.asarray(series.H)
    n = q.size
    if n < min_points:
        raise DegenerateFitError(f"need at least {min_points} strobe points, got {n}")
    var_q = float(np.var(q))
    if var_q < VAR_FLOOR:
        raise DegenerateFitError(f"strobe q spread too small for a fit (var = {var_q:.3g})")
    qm, Hm = q.mean(), H.mean()
    slope = float(np.mean((q - qm) * (H - Hm)) / var_q)
    intercept = float(Hm - slope * qm)
    resid = H - (intercept + slope * q)
    ss_res = float(resid @ resid)
    ss_tot = float(((H - Hm) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GammaFit(-slope, intercept, math.sqrt(ss_res / n), min(1.0, max(0.0, r2)), n)


def gamma_of_field(spec: FieldSpec, c0=(0.5, 0.0), n_periods: int = 300, ctrl: StepControl | None = None) -> GammaFit:
    return fit_gamma(strobe_trajectory(spec, c0, n_periods, ctrl))


def gamma_sweep(B0_values, B1: float, omega: float, c0=(0.5, 0.0), n_periods: int = 300, ctrl=None):
    """(B0, GammaFit) for NRzDrive(B0, B1, omega) over ``B0_values``."""
    return [(float(b), gamma_of_field(FieldSpec.nrz_drive(b, B1, omega), c0, n_periods, ctrl)) for b in B0_values]


# -- contour laws ------------------------------------------------------------


@dataclass(frozen=True)
class ContourLaw:
    """2 B0 sqrt(1-q^2) cos p - 2 (B1 - f/2) q with f = omega (R) or gamma (NR)."""

    kind: str
    B0: float
    B1: float
    frequency: float

    def __call__(self, q, p):
        q = np.asarray(q, dtype=float)
        return 2.0 * self.B0 * np.sqrt(np.maximum(0.0, 1.0 - q * q)) * np.cos(p) - 2.0 * (
            self.B1 - 0.5 * self.frequency
        ) * q

    @classmethod
    def for_field(cls, spec: FieldSpec, gamma: float | None = None):
        if spec.kind == "Rotating":
            return cls("R", *spec.amplitudes, spec.omega)
        if spec.kind == "NRzDrive":
            if gamma is None:
                raise ConfigError("NR contour law needs a fitted gamma")
            return cls("NR", *spec.amplitudes, gamma)
        raise ConfigError(f"no contour law for {spec.kind}")


def contour_residual(law: ContourLaw, series: StrobeSeries) -> float:
    """RMS deviation of law(q_k, p_k) from its value at the first sample."""
    vals = law(series.q, series.p)
    return float(np.sqrt(np.mean((vals - vals[0]) ** 2)))


def continuous_k_deviation(spec: FieldSpec, c0, t_max: float, samples_per_period: int = 64, ctrl=None) -> float:
    """max_t |K(t) - K(0)| along the continuous rotating-field trajectory.

    K(t) = 2 B0 sqrt(1-q^2) cos(p - omega t) - 2 (B1 - omega/2) q is the
    rotating-frame energy, conserved at all times, not only at strobe
    instants.
    """
    if spec.kind != "Rotating":
        raise ConfigError("continuous K conservation applies to the Rotating field")
    B0, B1 = spec.amplitudes
    T = spec.period
    n = max(1, math.ceil(t_max / T * samples_per_period))
    times, psi = trajectory(spec, state_from_canonical(c0), 0.0, T / samples_per_period, n, ctrl or STROBE_CONTROL)
    q, p, _ = canonical_arrays(bloch_from_spinor(psi))
    K = ContourLaw("R", B0, B1, spec.omega)(q, p - spec.omega * times)
    return float(np.max(np.abs(K - K[0])))
