"""Shared oracles and hypothesis profile.

The reference propagator integrates i dU/dt = H(t) U with scipy's DOP853
at tight tolerances; it shares no code with the package integrator.
"""

import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.integrate import solve_ivp

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def field_fn(kind, a, b, w):
    """Plain-python field formulas, written independently of the package."""
    if kind == "Rotating":
        return lambda t: -2.0 * np.array([a * math.cos(w * t), a * math.sin(w * t), b])
    if kind == "NRzDrive":
        return lambda t: -2.0 * np.array([a, 0.0, b * math.cos(w * t)])
    if kind == "NRxDrive":
        return lambda t: -2.0 * np.array([a * math.cos(w * t), 0.0, b])
    raise ValueError(kind)


def oracle_propagator(B, t0, t1, rtol=1e-13):
    def rhs(t, y):
        bx, by, bz = B(t)
        H = -0.5 * (bx * SX + by * SY + bz * SZ)
        return (-1j * H @ y.reshape(2, 2)).ravel()

    sol = solve_ivp(rhs, (t0, t1), np.eye(2, dtype=complex).ravel(), method="DOP853", rtol=rtol, atol=rtol)
    return sol.y[:, -1].reshape(2, 2)


def oracle_bloch(psi):
    psi = np.asarray(psi)
    return np.real([np.vdot(psi, P @ psi) for P in (SX, SY, SZ)])


def random_spinor(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_record():
    """Record one pass/fail line per acceptance criterion."""

    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
