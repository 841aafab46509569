"""Drive fields B(t), the qubit Hamiltonian H(t) = -1/2 B(t).Sigma and the
classical gyromagnet energy -B(t).S.

All amplitudes are angular frequencies (hbar = 1).  Periodic fields reduce
``t`` modulo the period before any trigonometric evaluation.

Field kinds
-----------
Rotating(B0, B1, omega)
    B = -2 (B0 cos wt, B0 sin wt, B1)
NRxDrive(B2, B3, omega)
    B = -2 (B2 cos wt, 0, B3)
NRzDrive(B0, B1, omega)
    B = -2 (B0, 0, B1 cos wt); the NRxDrive field rotated by pi/2 about y
    with B3 -> B0, B2 -> -B1.
Constant(Bx, By, Bz)
    B = (Bx, By, Bz); no prefactor.
Quasiperiodic(Bx, By, Bz; terms)
    B_axis = offset_axis + sum(amp * cos(freq t + phase)) over the terms on
    that axis; no prefactor.  ``omega`` is a reference frequency used only
    to size steps and to express horizons in "periods".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DomainError

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

KINDS = ("Rotating", "NRxDrive", "NRzDrive", "Constant", "Quasiperiodic")
_N_AMPLITUDES = {"Rotating": 2, "NRxDrive": 2, "NRzDrive": 2, "Constant": 3, "Quasiperiodic": 3}
_AXES = {"x": 0, "y": 1, "z": 2}

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
IDENTITY = np.eye(2, dtype=complex)

UNIT_TOL = 1e-10


class QPTerm(NamedTuple):
    """One cosine term ``amplitude * cos(frequency * t + phase)`` on ``axis``."""

    axis: str
    amplitude: float
    frequency: float
    phase: float = 0.0


class CosineTable(NamedTuple):
    """Flat representation shared by every field kind, consumed by the kernels."""

    offset: np.ndarray
    axes: np.ndarray
    amps: np.ndarray
    freqs: np.ndarray
    phases: np.ndarray


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    amplitudes: tuple = ()
    omega: float | None = None
    qp_components: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown field kind {self.kind!r}; expected one of {KINDS}")
        amps = tuple(float(a) for a in self.amplitudes)
        if len(amps) != _N_AMPLITUDES[self.kind]:
            raise ConfigError(
                f"{self.kind} takes {_N_AMPLITUDES[self.kind]} amplitudes, got {len(amps)}"
            )
        if not all(math.isfinite(a) for a in amps):
            raise ConfigError("field amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

        terms = tuple(QPTerm(*t) for t in self.qp_components)
        if self.kind == "Quasiperiodic":
            if not terms:
                raise ConfigError("Quasiperiodic field needs at least one component")
            for t in terms:
                if t.axis not in _AXES:
                    raise ConfigError(f"bad quasiperiodic axis {t.axis!r}")
                if not (math.isfinite(t.amplitude) and math.isfinite(t.frequency) and math.isfinite(t.phase)):
                    raise ConfigError("quasiperiodic terms must be finite")
                if t.frequency <= 0:
                    raise ConfigError("quasiperiodic frequencies must be > 0")
            if self.omega is None:
                object.__setattr__(self, "omega", float(terms[0].frequency))
        elif terms:
            raise ConfigError(f"{self.kind} does not take quasiperiodic components")
        object.__setattr__(self, "qp_components", terms)

        if self.kind == "Constant":
            if self.omega is not None:
                raise ConfigError("Constant field has no drive frequency")
        else:
            if self.omega is None or not math.isfinite(self.omega) or self.omega <= 0:
                raise ConfigError(f"omega must be a finite number > 0, got {self.omega!r}")
            object.__setattr__(self, "omega", float(self.omega))

    # -- constructors -----------------------------------------------------

    @classmethod
    def rotating(cls, B0, B1, omega):
        return cls("Rotating", (B0, B1), omega)

    @classmethod
    def nrx_drive(cls, B2, B3, omega):
        return cls("NRxDrive", (B2, B3), omega)

    @classmethod
    def nrz_drive(cls, B0, B1, omega):
        return cls("NRzDrive", (B0, B1), omega)

    @classmethod
    def constant(cls, Bx, By, Bz):
        return cls("Constant", (Bx, By, Bz))

    @classmethod
    def quasiperiodic(cls, terms, offset=(0.0, 0.0, 0.0), omega=None):
        return cls("Quasiperiodic", tuple(offset), omega, tuple(terms))

    @classmethod
    def golden_quasiperiodic(cls, B0, B1, omega):
        """Two-frequency test field -2 (B0 cos wt, B0 cos(g wt), B1), g the golden ratio."""
        terms = (QPTerm("x", -2.0 * B0, omega), QPTerm("y", -2.0 * B0, GOLDEN * omega))
        return cls.quasiperiodic(terms, offset=(0.0, 0.0, -2.0 * B1), omega=omega)

    # -- derived quantities -----------------------------------------------

    @property
    def is_periodic(self):
        return self.kind in ("Rotating", "NRxDrive", "NRzDrive")

    @property
    def period(self):
        """Drive period 2 pi / omega; ``None`` for non-periodic kinds."""
        return 2.0 * math.pi / self.omega if self.is_periodic else None

    @property
    def reference_period(self):
        """Timescale used to size integration steps."""
        if self.omega is not None:
            return 2.0 * math.pi / self.omega
        return None

    def reduce_time(self, t):
        """Map ``t`` into [0, T) for periodic fields; identity otherwise."""
        if not self.is_periodic:
            return t
        T = self.period
        r = math.fmod(t, T)
        if r < 0.0:
            r += T
        if r >= T:
            r = 0.0
        return r

    @cached_property
    def table(self) -> CosineTable:
        offset = np.zeros(3)
        terms = []
        if self.kind == "Rotating":
            B0, B1 = self.amplitudes
            terms = [(0, -2 * B0, self.omega, 0.0), (1, -2 * B0, self.omega, -math.pi / 2)]
            offset[2] = -2 * B1
        elif self.kind == "NRxDrive":
            B2, B3 = self.amplitudes
            terms = [(0, -2 * B2, self.omega, 0.0)]
            offset[2] = -2 * B3
        elif self.kind == "NRzDrive":
            B0, B1 = self.amplitudes
            terms = [(2, -2 * B1, self.omega, 0.0)]
            offset[0] = -2 * B0
        elif self.kind == "Constant":
            offset[:] = self.amplitudes
        else:
            offset[:] = self.amplitudes
            terms = [(_AXES[t.axis], t.amplitude, t.frequency, t.phase) for t in self.qp_components]
        arr = np.array(terms, dtype=float).reshape(-1, 4)
        return CosineTable(
            offset,
            np.ascontiguousarray(arr[:, 0], dtype=np.int64),
            np.ascontiguousarray(arr[:, 1]),
            np.ascontiguousarray(arr[:, 2]),
            np.ascontiguousarray(arr[:, 3]),
        )


def evaluate_field(spec: FieldSpec, t: float) -> np.ndarray:
    """Return B(t) as a length-3 float array."""
    if not math.isfinite(t):
        raise DomainError(f"time must be finite, got {t!r}")
    kind = spec.kind
    if kind == "Constant":
        return np.array(spec.amplitudes, dtype=float)
    if kind == "Quasiperiodic":
        B = np.array(spec.amplitudes, dtype=float)
        for term in spec.qp_components:
            B[_AXES[term.axis]] += term.amplitude * math.cos(term.frequency * t + term.phase)
        return B
    theta = spec.omega * spec.reduce_time(t)
    c = math.cos(theta)
    a, b = spec.amplitudes
    if kind == "Rotating":
        return -2.0 * np.array([a * c, a * math.sin(theta), b])
    if kind == "NRxDrive":
        return -2.0 * np.array([a * c, 0.0, b])
    return -2.0 * np.array([a, 0.0, b * c])


def hamiltonian_matrix(spec: FieldSpec, t: float) -> np.ndarray:
    """H(t) = -1/2 B(t).Sigma as a 2x2 complex array."""
    B = evaluate_field(spec, t)
    return -0.5 * np.tensordot(B, PAULI, axes=1)


def check_unit(S, tol=UNIT_TOL):
    S = np.asarray(S, dtype=float)
    if S.shape != (3,):
        raise DomainError(f"Bloch vector must have 3 components, got shape {S.shape}")
    n = float(np.linalg.norm(S))
    if abs(n - 1.0) > tol:
        raise DomainError(f"Bloch vector is not unit length (|S| = {n:.15g})")
    return S


def classical_energy(spec: FieldSpec, t: float, S) -> float:
    """Gyromagnet energy -B(t).S for a unit Bloch vector ``S``."""
    S = check_unit(S)
    return float(-evaluate_field(spec, t) @ S)
