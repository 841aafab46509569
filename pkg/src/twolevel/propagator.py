"""Unitary propagation of spinors and density matrices.

The integrator is the exponential midpoint rule: each step of length h
multiplies by the closed-form SU(2) exponential of H at the step centre.
Every step is exactly special-unitary.  Accuracy is controlled by halving
the step and Romberg-extrapolating the resulting propagators (the midpoint
rule is symmetric, so its error expands in even powers of h); extrapolants
are projected back onto SU(2).

For periodic fields the propagator over one period is computed once and
raised to integer powers in closed form, so long horizons cost the same as
a single period.

States are numpy arrays: spinors ``(c_plus, c_minus)`` of shape (2,),
Bloch vectors of shape (3,), propagators of shape (2, 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import AccuracyError, ConfigError, DomainError
from .fields import PAULI, FieldSpec, evaluate_field

KET_PLUS = np.array([1.0, 0.0], dtype=complex)
KET_MINUS = np.array([0.0, 1.0], dtype=complex)

NORM_TOL = 1e-10


@dataclass(frozen=True)
class StepControl:
    """Step-size refinement settings.

    ``steps_per_period`` is the coarsest level (16 times a power of two);
    each refinement halves the step.  With ``extrapolate`` the successive
    levels are combined into a Romberg tableau; without it the raw midpoint
    values are compared.
    """

    steps_per_period: int = 64
    tolerance: float = 1e-10
    max_refinements: int = 12
    extrapolate: bool = True

    def __post_init__(self):
        n = self.steps_per_period
        if not isinstance(n, (int, np.integer)) or n < 16 or n % 16 or (n // 16) & (n // 16 - 1):
            raise ConfigError(f"steps_per_period must be 16 * 2**k, got {n!r}")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be > 0")
        if self.max_refinements < 1:
            raise ConfigError("max_refinements must be >= 1")


DEFAULT_CONTROL = StepControl()


# -- SU(2) helpers ----------------------------------------------------------


def su2_exponential(b, h) -> np.ndarray:
    """exp(-i h H) for H = -1/2 b.Sigma, in closed form.

    With a = -b/2 the result is cos(|a| h) 1 - i sin(|a| h) (a.Sigma)/|a|;
    a vanishing field gives the identity.
    """
    a = -0.5 * np.asarray(b, dtype=float)
    n = math.sqrt(float(a @ a))
    c = math.cos(n * h)
    s = math.sin(n * h) / n if n > 0.0 else h
    ax, ay, az = a
    return np.array(
        [[c - 1j * s * az, -1j * s * (ax - 1j * ay)], [-1j * s * (ax + 1j * ay), c + 1j * s * az]]
    )


def project_su2(M):
    """Nearest-form SU(2) matrix [[a, -b*], [b, a*]] built from ``M``.

    Works on a single matrix or a stack of shape (..., 2, 2).
    """
    M = np.asarray(M)
    a = 0.5 * (M[..., 0, 0] + np.conj(M[..., 1, 1]))
    b = 0.5 * (M[..., 1, 0] - np.conj(M[..., 0, 1]))
    norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
    a = a / norm
    b = b / norm
    out = np.empty(M.shape, dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = -np.conj(b)
    out[..., 1, 0] = b
    out[..., 1, 1] = np.conj(a)
    return out


def su2_power(U, m: int) -> np.ndarray:
    """U**m for U in SU(2), via its rotation angle (no repeated products)."""
    if m == 0:
        return np.eye(2, dtype=complex)
    U = np.asarray(U)
    a, b = U[0, 0], U[1, 0]
    v = np.array([-b.imag, b.real, -a.imag])
    s = float(np.linalg.norm(v))
    if s == 0.0:
        return np.eye(2, dtype=complex) * (a.real**m)
    theta = math.atan2(s, a.real)
    n = v / s
    ang = m * theta
    c, sn = math.cos(ang), math.sin(ang)
    nx, ny, nz = n
    return np.array(
        [[c - 1j * sn * nz, -1j * sn * (nx - 1j * ny)], [-1j * sn * (nx + 1j * ny), c + 1j * sn * nz]]
    )


def unitarity_defect(U) -> float:
    U = np.asarray(U)
    return float(np.abs(U.conj().T @ U - np.eye(2)).max())


def rotation_from_su2(U):
    """SO(3) matrix R with S(t) = R S(0), R_ij = 1/2 Tr(sigma_i U sigma_j U^dagger).

    Accepts a single propagator or a stack (..., 2, 2).
    """
    U = np.asarray(U)
    Ud = np.conj(np.swapaxes(U, -1, -2))
    # conjugated Paulis U sigma_j U^dagger, shape (..., j, 2, 2)
    conj = np.einsum("...ab,jbc,...cd->...jad", U, PAULI, Ud)
    return 0.5 * np.real(np.einsum("iba,...jab->...ij", PAULI, conj))


# -- states -----------------------------------------------------------------


def check_spinor(psi, tol=NORM_TOL):
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise DomainError(f"spinor must have 2 components, got shape {psi.shape}")
    n = float(np.linalg.norm(psi))
    if abs(n - 1.0) > tol:
        raise DomainError(f"spinor is not normalized (|psi| = {n:.15g})")
    return psi


def density_from_spinor(psi) -> np.ndarray:
    psi = check_spinor(psi)
    return np.outer(psi, psi.conj())


def bloch_from_density(rho) -> np.ndarray:
    """S_i = Tr(rho sigma_i)."""
    rho = np.asarray(rho)
    return np.real(np.einsum("ab,iba->i", rho, PAULI))


def bloch_from_spinor(psi) -> np.ndarray:
    psi = np.asarray(psi)
    z = np.conj(psi[..., 0]) * psi[..., 1]
    return np.stack(
        [2.0 * z.real, 2.0 * z.imag, np.abs(psi[..., 0]) ** 2 - np.abs(psi[..., 1]) ** 2], axis=-1
    )


# -- propagation ------------------------------------------------------------


def midpoint_propagator(spec: FieldSpec, t0: float, t1: float, n_steps: int) -> np.ndarray:
    """Fixed-step exponential-midpoint propagator from t0 to t1 (no refinement)."""
    h = (t1 - t0) / n_steps
    return _backend.step_product(*spec.table, spec.reduce_time(t0), h, int(n_steps))


def _romberg_update(rows, new, extrapolate):
    """Append ``new`` (finest midpoint value) to the tableau; return the best estimate."""
    if not extrapolate:
        rows.append([new])
        return new
    row = [new]
    if rows:
        prev = rows[-1]
        for j in range(1, len(prev) + 1):
            f = 4.0**j
            row.append(row[j - 1] + (row[j - 1] - prev[j - 1]) / (f - 1.0))
    rows.append(row)
    return row[-1]


def _base_steps(spec, duration, steps_per_period):
    T = spec.reference_period
    return max(1, math.ceil(steps_per_period * duration / T - 1e-9))


def _split_periods(spec, duration):
    """Whole periods ``m`` and remainder ``rem`` with duration = m T + rem."""
    if not spec.is_periodic:
        return 0, duration
    T = spec.period
    m = int(math.floor(duration / T + 1e-12))
    rem = duration - m * T
    if rem < 1e-12 * T:
        rem = 0.0
    return m, rem


def _refine(levels, measure, ctrl, stacked=False):
    """Drive the halving loop.

    ``levels(k)`` returns the total propagator (already SU(2)) at refinement
    level k; ``measure`` maps it to the vector whose convergence is tested.
    With ``stacked`` the value is a stack of propagators and the largest
    per-matrix change is tested.
    """
    prev = None
    diff = math.inf
    for k in range(ctrl.max_refinements + 1):
        U = levels(k)
        cur = measure(U)
        if prev is not None:
            d = cur - prev
            if stacked:
                diff = float(np.linalg.norm(d.reshape(-1, 4), axis=1).max())
            else:
                diff = float(np.linalg.norm(d))
            if diff <= ctrl.tolerance:
                return U, diff, k
        prev = cur
    raise AccuracyError(
        f"step refinement did not reach tolerance {ctrl.tolerance:g} "
        f"after {ctrl.max_refinements} halvings (achieved {diff:.3g})",
        achieved=diff,
    )


def propagator_info(spec: FieldSpec, t0: float, t1: float, ctrl: StepControl | None = None, measure=None):
    """Refined propagator U(t1, t0) together with (achieved_difference, levels)."""
    ctrl = ctrl or DEFAULT_CONTROL
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise DomainError("times must be finite")
    if t1 < t0:
        raise DomainError("t1 must be >= t0")
    duration = t1 - t0
    if spec.kind == "Constant" or duration == 0.0:
        # midpoint is exact for a constant field
        return su2_exponential(evaluate_field(spec, t0), duration), 0.0, 0
    measure = measure or (lambda U: U.ravel())
    m, rem = _split_periods(spec, duration)
    start = spec.reduce_time(t0)
    n0 = ctrl.steps_per_period
    per_rows, rem_rows = [], []
    n_rem0 = _base_steps(spec, rem, n0) if rem > 0 else 0
    T = spec.period

    def levels(k):
        scale = 1 << k
        U = np.eye(2, dtype=complex)
        if m:
            raw = _backend.step_product(*spec.table, start, T / (n0 * scale), n0 * scale)
            per = project_su2(_romberg_update(per_rows, raw, ctrl.extrapolate))
            U = su2_power(per, m)
        if rem > 0:
            n = n_rem0 * scale
            raw = _backend.step_product(*spec.table, start, rem / n, n)
            U = project_su2(_romberg_update(rem_rows, raw, ctrl.extrapolate)) @ U
        return U

    U, diff, k = _refine(levels, measure, ctrl)
    return U, diff, k


def propagator(spec: FieldSpec, t0: float, t1: float, ctrl: StepControl | None = None) -> np.ndarray:
    """Refined unitary U(t1, t0)."""
    return propagator_info(spec, t0, t1, ctrl)[0]


def propagate(spec: FieldSpec, psi0, t0: float, t1: float, ctrl: StepControl | None = None) -> np.ndarray:
    """psi(t1) from psi(t0) = psi0.

    Refinement stops once two successive levels give states closer than
    ``ctrl.tolerance``.  The result is not renormalized.
    """
    psi0 = check_spinor(psi0)
    U, _, _ = propagator_info(spec, t0, t1, ctrl, measure=lambda U: U @ psi0)
    return U @ psi0


def interval_propagators(spec: FieldSpec, t0: float, dt: float, n: int, ctrl: StepControl | None = None):
    """Refined propagators over [t0 + i dt, t0 + (i+1) dt], i = 0..n-1.

    The tolerance applies to each interval separately.
    """
    ctrl = ctrl or DEFAULT_CONTROL
    if spec.kind == "Constant":
        return np.broadcast_to(su2_exponential(evaluate_field(spec, t0), dt), (n, 2, 2)).copy()
    start = spec.reduce_time(t0)
    sub0 = max(1, math.ceil(ctrl.steps_per_period * dt / spec.reference_period - 1e-9))
    rows = []

    def levels(k):
        sub = sub0 << k
        raw = _backend.interval_products(*spec.table, start, dt / sub, sub, n, False)
        return project_su2(_romberg_update(rows, raw, ctrl.extrapolate))

    return _refine(levels, lambda B: B, ctrl, stacked=True)[0]


def _cumulate(steps):
    out = np.empty_like(steps)
    acc = np.eye(2, dtype=complex)
    for i in range(steps.shape[0]):
        acc = steps[i] @ acc
        out[i] = acc
    return out


def sample_propagators(spec: FieldSpec, t0: float, dt: float, n_samples: int, ctrl: StepControl | None = None):
    """Propagators U(t0 + i dt, t0) for i = 0..n_samples, shape (n_samples + 1, 2, 2).

    Each sampling interval is refined to ``ctrl.tolerance``.  When the
    sampling step divides the period, only one period of intervals is
    computed and later samples come from powers of the period propagator.
    """
    if dt <= 0 or n_samples < 0:
        raise DomainError("need dt > 0 and n_samples >= 0")
    out = np.empty((n_samples + 1, 2, 2), dtype=complex)
    out[0] = np.eye(2)
    if n_samples == 0:
        return out
    if spec.kind == "Constant":
        B = evaluate_field(spec, t0)
        for i in range(1, n_samples + 1):
            out[i] = su2_exponential(B, i * dt)
        return out

    per_period = None
    if spec.is_periodic:
        s = round(spec.period / dt)
        if s >= 1 and abs(s * dt - spec.period) <= 1e-12 * spec.period:
            per_period = s
    n_block = per_period if per_period is not None and per_period < n_samples else n_samples
    block = _cumulate(interval_propagators(spec, t0, dt, n_block, ctrl))
    if n_block == n_samples:
        out[1:] = block
        return out
    P = project_su2(block[-1])
    for i in range(1, n_samples + 1):
        k, j = divmod(i, n_block)
        Pk = su2_power(P, k)
        out[i] = Pk if j == 0 else block[j - 1] @ Pk
    return out


def trajectory(spec: FieldSpec, psi0, t0: float, dt: float, n_samples: int, ctrl: StepControl | None = None):
    """Times and spinors psi(t0 + i dt), i = 0..n_samples."""
    psi0 = check_spinor(psi0)
    U = sample_propagators(spec, t0, dt, n_samples, ctrl)
    times = t0 + dt * np.arange(n_samples + 1)
    return times, U @ psi0


# -- closed-form solutions ---------------------------------------------------


def _z_frame(omega, t):
    """exp(-i omega t sigma_z / 2) as a diagonal 2-vector."""
    ph = 0.5 * omega * t
    return np.array([np.exp(-1j * ph), np.exp(1j * ph)])


def analytic_rotating_solution(B0, B1, omega, psi0, t) -> np.ndarray:
    """Exact spinor for the rotating field -2 (B0 cos wt, B0 sin wt, B1).

    psi(t) = exp(-i w t sz/2) exp(-i t (B0 sx + Omega sz)) psi0 with
    Omega = B1 - w/2.
    """
    psi0 = check_spinor(psi0)
    Omega = B1 - 0.5 * omega
    # exp(-i t H_eff) with H_eff = -1/2 b.Sigma, b = -2 (B0, 0, Omega)
    U = su2_exponential(np.array([-2.0 * B0, 0.0, -2.0 * Omega]), t)
    return _z_frame(omega, t) * (U @ psi0)


def rotating_precession_frequency(B0, B1, omega):
    """Characteristic frequency 2 sqrt(B0^2 + (B1 - w/2)^2) of the rotating-frame motion."""
    return 2.0 * math.hypot(B0, B1 - 0.5 * omega)


def rwa_solution(B2, omega, psi0, t) -> np.ndarray:
    """exp(-i w t sz/2) exp(-i B2 t sx/2) psi0."""
    psi0 = check_spinor(psi0)
    c, s = math.cos(0.5 * B2 * t), math.sin(0.5 * B2 * t)
    rot = np.array([[c, -1j * s], [-1j * s, c]])
    return _z_frame(omega, t) * (rot @ psi0)
