import math

import numpy as np
import pytest

from conftest import field_fn, oracle_propagator
from twolevel.bloch import CanonicalPoint
from twolevel.errors import ConfigError, DegenerateFitError
from twolevel.fields import FieldSpec
from twolevel.stroboscope import (
    ContourLaw,
    StrobeSeries,
    contour_residual,
    continuous_k_deviation,
    default_grid,
    fit_gamma,
    gamma_of_field,
    gamma_sweep,
    period_propagator,
    strobe_map,
    strobe_trajectory,
)

# gamma for NRzDrive(1, 1.5, 3) from a DOP853 monodromy and numpy polyfit
GAMMA_FIG1 = 4.955984664806705


def synthetic(q, H):
    q = np.asarray(q, dtype=float)
    k = np.arange(q.size)
    return StrobeSeries(k, k * 1.0, q, np.zeros_like(q), np.asarray(H, dtype=float), np.zeros(q.size, bool), None, CanonicalPoint(0, 0))


def test_constant_z_preserves_q():
    s = strobe_trajectory(FieldSpec.constant(0, 0, 1.3), (0.3, 0.7), 50, period=2.0)
    np.testing.assert_allclose(s.q, 0.3, atol=1e-14)
    assert len(s) == 51


def test_constant_needs_period():
    with pytest.raises(ConfigError):
        strobe_trajectory(FieldSpec.constant(0, 0, 1.3), (0.3, 0.7), 5)
    with pytest.raises(ConfigError):
        strobe_trajectory(FieldSpec.golden_quasiperiodic(1, 1.5, 3), (0.3, 0.7), 5)


def test_monodromy_against_oracle():
    spec = FieldSpec.nrz_drive(1.0, 1.5, 3.0)
    np.testing.assert_allclose(period_propagator(spec), oracle_propagator(field_fn("NRzDrive", 1.0, 1.5, 3.0), 0.0, spec.period), atol=1e-11)


def test_series_fields():
    spec = FieldSpec.nrz_drive(1.0, 1.5, 3.0)
    s = strobe_trajectory(spec, (0.5, 0.0), 10)
    np.testing.assert_allclose(s.t, np.arange(11) * spec.period)
    assert s.q[0] == pytest.approx(0.5) and s.p[0] == 0.0
    assert not s.pole.any()


def test_pole_samples_flagged():
    # start at a pole of a field that fixes it
    s = strobe_trajectory(FieldSpec.constant(0, 0, 2.0), (1.0, 0.0), 4, period=1.0)
    assert s.pole.all() and np.all(s.p == 0.0)


def test_empty_grid():
    assert strobe_map(FieldSpec.nrz_drive(1.0, 1.5, 3.0), [], 100) == []
    assert default_grid(0) == []


def test_map_threads_match_serial():
    spec = FieldSpec.nrz_drive(1.0, 1.5, 3.0)
    grid = default_grid(6)
    a = strobe_map(spec, grid, 40)
    b = strobe_map(spec, grid, 40, threads=3)
    for x, y in zip(a, b):
        assert np.array_equal(x.q, y.q) and np.array_equal(x.p, y.p)


def test_fig1a_map_points_on_closed_curves():
    spec = FieldSpec.nrz_drive(1.0, 1.5, 3.0)
    series = strobe_map(spec, default_grid(20), 500)
    assert len(series) == 20 and all(len(s) == 501 for s in series)
    fit = fit_gamma(series[5])
    law = ContourLaw.for_field(spec, fit.gamma)
    for s in series:
        assert contour_residual(law, s) <= 1e-2


def test_fit_synthetic_exact():
    q = np.linspace(-0.8, 0.9, 30)
    fit = fit_gamma(synthetic(q, 3.0 - 2.5 * q))
    assert fit.gamma == pytest.approx(2.5, abs=1e-13)
    assert fit.intercept == pytest.approx(3.0, abs=1e-13)
    assert fit.r_squared == 1.0 and fit.n_points == 30


def test_fit_degenerate():
    with pytest.raises(DegenerateFitError):
        fit_gamma(synthetic(np.full(20, 0.3), np.zeros(20)))
    with pytest.raises(DegenerateFitError):
        fit_gamma(synthetic([0.1, 0.2, 0.3], [1, 2, 3]))


def test_gamma_fig1_against_oracle():
    fit = gamma_of_field(FieldSpec.nrz_drive(1.0, 1.5, 3.0), (0.5, 0.0), 300)
    assert fit.gamma == pytest.approx(GAMMA_FIG1, abs=1e-9)
    assert fit.r_squared >= 0.999


def test_gamma_independent_of_start():
    spec = FieldSpec.nrz_drive(1.0, 1.5, 3.0)
    g = [gamma_of_field(spec, c0, 300).gamma for c0 in [(0.5, 0.0), (-0.3, 1.0), (0.8, 2.5)]]
    assert max(g) - min(g) < 1e-9


@pytest.mark.parametrize("B0,B1,w", [(1.0, 1.5, 4.9559), (0.4, -0.7, 2.0), (1.7, 0.2, 1.3)])
def test_rotating_gamma_is_omega(B0, B1, w):
    spec = FieldSpec.rotating(B0, B1, w)
    fit = gamma_of_field(spec, (0.5, 0.0), 300)
    assert fit.gamma == pytest.approx(w, abs=1e-9)
    s = strobe_trajectory(spec, (0.5, 0.0), 300)
    assert contour_residual(ContourLaw.for_field(spec), s) <= 1e-8


def test_contour_residual_single_point():
    spec = FieldSpec.rotating(1.0, 1.5, 3.0)
    s = strobe_trajectory(spec, (0.2, 0.3), 1)
    one = StrobeSeries(s.k[:1], s.t[:1], s.q[:1], s.p[:1], s.H[:1], s.pole[:1], spec, s.initial)
    assert contour_residual(ContourLaw.for_field(spec), one) == 0.0


def test_contour_law_needs_gamma():
    with pytest.raises(ConfigError):
        ContourLaw.for_field(FieldSpec.nrz_drive(1.0, 1.5, 3.0))
    with pytest.raises(ConfigError):
        ContourLaw.for_field(FieldSpec.constant(0, 0, 1))


def test_continuous_k_conserved():
    spec = FieldSpec.rotating(1.0, 1.5, 3.0)
    assert continuous_k_deviation(spec, (0.4, 0.2), 20 * spec.period) < 1e-9
    with pytest.raises(ConfigError):
        continuous_k_deviation(FieldSpec.nrz_drive(1.0, 1.5, 3.0), (0.4, 0.2), 5.0)


def test_gamma_sweep_monotone_region():
    out = gamma_sweep([1.2, 1.28, 1.35], 1.5, 1.0)
    assert [b for b, _ in out] == [1.2, 1.28, 1.35]
    assert all(f.r_squared > 0.999 for _, f in out)


def test_report_format():
    rep = fit_gamma(synthetic(np.linspace(-1, 1, 11), 1 - 2 * np.linspace(-1, 1, 11))).report()
    assert rep.splitlines()[0].split() == ["gamma", "2"]
    assert [line.split()[0] for line in rep.splitlines()] == ["gamma", "intercept", "r_squared", "residual_rms", "n_points"]


def test_suspected_periodic():
    # a rotation by 2 pi / 4 per period revisits four points
    spec = FieldSpec.constant(0, 0, 1.0)
    s = strobe_trajectory(spec, (0.1, 0.0), 12, period=math.pi / 2)
    assert s.n_distinct == 4 and s.suspected_periodic
