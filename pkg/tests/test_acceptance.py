"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary.
"""

import math
import time

import numpy as np

from conftest import random_spinor, random_unit
from twolevel.analysis import distance_conservation_run, fit_rwa_exponent, lyapunov_estimate
from twolevel.bloch import bloch_from_canonical, canonical_from_bloch, state_from_canonical
from twolevel.fields import FieldSpec
from twolevel.notgate import detect_not_many, nr_not_search, overlap_identity
from twolevel.propagator import KET_PLUS, analytic_rotating_solution, bloch_from_spinor, propagate
from twolevel.stroboscope import ContourLaw, contour_residual, default_grid, fit_gamma, strobe_map, strobe_trajectory

FIG2_Q0 = (-0.8, -0.4, 0.0, 0.4, 0.8)


def fig2_check(B0, B1=1.5, omega=1.0):
    """Per-q0 (t_not, overlap) of the event nearest 5 pi, or None."""
    spec = FieldSpec.nrz_drive(B0, B1, omega)
    results = detect_not_many(spec, [(q, math.pi / 2) for q in FIG2_Q0], 6 * math.pi, threshold=1e-2)
    found = []
    for evs in results:
        near = [e for e in evs if abs(e.t_not - 5 * math.pi) <= 0.1 and e.min_overlap <= 1e-2]
        found.append(min(near, key=lambda e: e.min_overlap) if near else None)
    return found


def test_criterion_1_gamma(acceptance_record):
    t0 = time.perf_counter()
    spec = FieldSpec.nrz_drive(1.0, 1.5, 3.0)
    fit = fit_gamma(strobe_trajectory(spec, (0.5, 0.0), 300))
    dt = time.perf_counter() - t0
    ok = abs(fit.gamma - 4.9559) <= 0.05 and fit.r_squared >= 0.999 and dt < 10
    acceptance_record("1 gamma reproduction", ok, f"gamma={fit.gamma:.6f} r2={fit.r_squared:.6f} time={dt:.2f}s")
    assert ok


def test_criterion_2_not_gate(acceptance_record):
    t0 = time.perf_counter()
    found = fig2_check(1.279)
    dt = time.perf_counter() - t0
    ok = all(e is not None for e in found) and dt < 30
    worst = max(e.min_overlap for e in found if e is not None) if any(found) else float("nan")
    times = " ".join(f"{e.t_not / math.pi:.5f}pi" if e else "none" for e in found)
    acceptance_record("2 NOT at 5pi", ok, f"t_not=[{times}] worst_overlap={worst:.2e} time={dt:.2f}s")
    assert ok


def test_criterion_3_design_search(acceptance_record):
    t0 = time.perf_counter()
    sol = nr_not_search(1.0, 1.5, (0.5, 2.0))
    found = fig2_check(sol.B0)
    dt = time.perf_counter() - t0
    ok = 1.27 <= sol.B0 <= 1.29 and 1.48 <= sol.gamma <= 1.50 and all(e is not None for e in found) and dt < 300
    acceptance_record(
        "3 NR design search",
        ok,
        f"B0={sol.B0:.5f} gamma={sol.gamma:.5f} residual={sol.residual:.1e} validated={all(found)} time={dt:.2f}s",
    )
    assert ok


def test_criterion_4_integrability(acceptance_record, rng):
    t0 = time.perf_counter()
    specs = {
        "Rotating": FieldSpec.rotating(1.0, 1.5, 3.0),
        "NRzDrive": FieldSpec.nrz_drive(1.0, 1.5, 3.0),
        "Quasiperiodic": FieldSpec.golden_quasiperiodic(1.0, 1.5, 3.0),
    }
    drift, lam = {}, {}
    for name, spec in specs.items():
        T = spec.reference_period
        drift[name] = max(
            distance_conservation_run(spec, random_unit(rng), random_unit(rng), 1e3 * T).max_deviation for _ in range(20)
        )
        lam[name] = lyapunov_estimate(spec, random_unit(rng), 1e-8, horizon=1e4 * T).lam
    dt = time.perf_counter() - t0
    ok = all(d <= 1e-10 for d in drift.values())
    ok &= all(abs(lam[n]) <= 1e-3 * specs[n].omega for n in specs)
    ok &= dt < 120
    detail = " ".join(f"{n}:drift={drift[n]:.1e},lambda={lam[n]:.1e}" for n in specs)
    acceptance_record("4 integrability", ok, f"{detail} time={dt:.2f}s")
    assert ok


def test_criterion_5_rwa_scaling(acceptance_record):
    t0 = time.perf_counter()
    fits = {label: fit_rwa_exponent([0.2, 0.1, 0.05, 0.025], 1.0, psi0) for label, psi0 in [("|+>", KET_PLUS), ("mixed", state_from_canonical((0.3, 1.1)))]}
    dt = time.perf_counter() - t0
    ok = all(0.8 <= f.alpha <= 1.2 for f in fits.values()) and dt < 60
    detail = " ".join(f"alpha[{k}]={f.alpha:.4f}" for k, f in fits.items())
    acceptance_record("5 RWA scaling", ok, f"{detail} time={dt:.2f}s")
    assert ok


def test_criterion_6_r_map_exactness(acceptance_record):
    t0 = time.perf_counter()
    spec = FieldSpec.rotating(1.0, 1.5, 4.9559)
    series = strobe_map(spec, default_grid(20), 500)
    law = ContourLaw.for_field(spec)
    rms = max(contour_residual(law, s) for s in series)
    gerr = max(abs(fit_gamma(s).gamma - spec.omega) for s in series[1:-1:3])
    dt = time.perf_counter() - t0
    ok = rms <= 1e-8 and gerr <= 1e-9 and dt < 10
    acceptance_record("6 R-map exactness", ok, f"K_rms={rms:.1e} |gamma-omega|={gerr:.1e} time={dt:.2f}s")
    assert ok


def test_criterion_7_oracle_suite(acceptance_record, rng):
    t0 = time.perf_counter()
    worst_prop = 0.0
    for _ in range(100):
        B0, B1, w = rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.5, 5.0)
        psi0 = random_spinor(rng)
        t = rng.uniform(0, 50) * 2 * math.pi / w
        got = propagate(FieldSpec.rotating(B0, B1, w), psi0, 0.0, t)
        worst_prop = max(worst_prop, float(np.linalg.norm(got - analytic_rotating_solution(B0, B1, w, psi0, t))))
    worst_ov = 0.0
    for _ in range(10_000):
        lhs, rhs = overlap_identity(random_spinor(rng), random_spinor(rng))
        worst_ov = max(worst_ov, abs(lhs - rhs))
    worst_chart = 0.0
    for _ in range(2000):
        q, p = rng.uniform(-1, 1), rng.uniform(-math.pi, math.pi)
        S = bloch_from_canonical((q, p))
        worst_chart = max(worst_chart, float(np.abs(bloch_from_spinor(state_from_canonical((q, p))) - S).max()))
        back = canonical_from_bloch(S)
        worst_chart = max(worst_chart, abs(back.q - q), abs(math.remainder(back.p - p, 2 * math.pi)) * math.sqrt(1 - q * q))
    dt = time.perf_counter() - t0
    ok = worst_prop <= 1e-9 and worst_ov <= 1e-12 and worst_chart <= 1e-13 and dt < 30
    acceptance_record(
        "7 oracle equivalence",
        ok,
        f"propagate={worst_prop:.1e} overlap={worst_ov:.1e} chart={worst_chart:.1e} time={dt:.2f}s",
    )
    assert ok
