"""Counting asymptotics: Weyl fits, trace/diagonal/b limits, Karamata."""
import math

import numpy as np
import pytest

from weyllab import (CountingFunction, WeightSpec, WindowTooNarrow,
                     analytic_spectrum, assemble, b_limit, build_mesh, cone,
                     diagonal_limit, disk, interval, karamata_check,
                     kernel_diagonal, lowest_eigs,
                     measure_independence_experiment, rectangle, time_ladder,
                     trace_limit, volume_profile, weyl_constant_forms,
                     weyl_fit, weyl_predict)
from weyllab.heat import HeatTrace

PI = math.pi


# ---------------------------------------------------------------------------
# constants and predictions
# ---------------------------------------------------------------------------


def test_weyl_constant_forms_agree():
    for k in (1, 2, 3):
        forms = weyl_constant_forms(k)
        assert all(f == pytest.approx(forms[0], rel=1e-14) for f in forms)
    assert weyl_constant_forms(1)[0] == pytest.approx(1 / PI)
    assert weyl_constant_forms(2)[0] == pytest.approx(1 / (4 * PI))


def test_weyl_predictions():
    assert weyl_predict(interval(PI)) == pytest.approx(1.0)
    assert weyl_predict(rectangle(1.0, 1.0)) == pytest.approx(1 / (4 * PI))
    assert weyl_predict(disk(1.0)) == pytest.approx(0.25)
    assert weyl_predict(cone(1.0, PI)) == pytest.approx(0.125)
    # density cancels between energy and measure: the constant ignores
    # the weight entirely
    w = WeightSpec("affine", (2.0, 0.0))
    assert weyl_predict(rectangle(1.0, 1.0, w)) == pytest.approx(1 / (4 * PI))


def test_time_ladder():
    t = time_ladder(1.0, rungs=4, ratio=4.0)
    assert np.allclose(t, [1.0, 0.25, 0.0625, 0.015625])
    assert np.all(np.diff(t) < 0)


# ---------------------------------------------------------------------------
# Weyl fits
# ---------------------------------------------------------------------------


def test_fit_is_exact_on_pure_power_counting():
    # lambda_j = j^2 means N(lambda_j) / lambda_j^{1/2} = 1 at every jump
    eigs = np.arange(1, 200, dtype=float) ** 2
    cf = CountingFunction("analytic", float(eigs[-1]), eigenvalues=eigs)
    fit = weyl_fit(cf, (100.0, 30000.0), fixed_exponent=0.5)
    assert fit.constant == pytest.approx(1.0, rel=1e-12)
    assert fit.exponent == 0.5


def test_free_fit_recovers_exponent_and_constant():
    eigs = np.arange(1, 3000, dtype=float) / 0.3   # N(lambda) = 0.3 lambda
    cf = CountingFunction("analytic", float(eigs[-1]), eigenvalues=eigs)
    fit = weyl_fit(cf, (200.0, 9000.0))
    assert fit.exponent == pytest.approx(1.0, abs=5e-3)
    assert fit.constant == pytest.approx(0.3, rel=2e-2)


def test_square_oracle_fit_approaches_weyl_constant():
    cf = analytic_spectrum(rectangle(1.0, 1.0), 4.2e5)
    fit = weyl_fit(cf, (4e4, 4e5), fixed_exponent=1.0)
    assert fit.constant == pytest.approx(1 / (4 * PI), rel=1e-2)
    # the boundary term biases the window average downward
    assert fit.constant < 1 / (4 * PI)


def test_window_too_narrow():
    cf = analytic_spectrum(interval(PI), 100.0)
    with pytest.raises(WindowTooNarrow):
        weyl_fit(cf, (50.0, 60.0))


def test_window_beyond_band_raises():
    spec = lowest_eigs(assemble(build_mesh(interval(PI), PI / 100)), 30,
                       want_vectors=False)
    from weyllab import counting_from_spectrum
    cf = counting_from_spectrum(spec)
    with pytest.raises(WindowTooNarrow):
        weyl_fit(cf, (cf.band_limit * 2, cf.band_limit * 8))


# ---------------------------------------------------------------------------
# Richardson limits
# ---------------------------------------------------------------------------


def test_trace_limit_strips_pure_powers():
    # synthetic tZ = A + B sqrt(t) + C t recovered to near machine precision
    A, B, C = 1 / (4 * PI), -0.11, 0.04
    times = time_ladder(0.4, rungs=5, ratio=4.0)
    values = (A + B * np.sqrt(times) + C * times) / times
    tr = HeatTrace(times, values, values, values, 0, None)
    est = trace_limit(tr, 2)
    assert est.limit == pytest.approx(A, rel=1e-12)
    assert abs(est.residual) < 1e-12


def test_diagonal_limit_interval_center():
    spec = lowest_eigs(assemble(build_mesh(interval(1.0), 1 / 400)), 60)
    kd = kernel_diagonal(spec, 0.5, time_ladder(0.02, rungs=4, ratio=2.0),
                         rel_budget=1e-3)
    est = diagonal_limit(kd, 1, 1.0)
    assert est.limit == pytest.approx(1 / math.sqrt(4 * PI), rel=1e-3)


def test_b_limits_match_local_structure():
    radii = np.geomspace(0.01, 0.12, 12)
    interior = b_limit(volume_profile(disk(1.0), (0.3, 0.0), radii), 2)
    assert interior.limit == pytest.approx(PI / 3, rel=1e-9)
    vertex = b_limit(volume_profile(cone(1.0, PI), (0.0, 0.0), radii), 2)
    assert vertex.limit == pytest.approx(PI / 6, rel=1e-9)
    flat = b_limit(volume_profile(interval(1.0), 0.5, radii), 1)
    assert flat.limit == pytest.approx(1.0, rel=1e-9)


# ---------------------------------------------------------------------------
# Karamata and measure independence
# ---------------------------------------------------------------------------


def test_karamata_on_synthetic_spectrum():
    eigs = np.arange(1, 4001, dtype=float)     # N(lambda) = lambda exactly
    cf = CountingFunction("analytic", 4000.0, eigenvalues=eigs)
    rep = karamata_check(cf, 2, tol=0.01)
    assert rep.holds
    assert rep.rel_error < 0.01
    assert rep.fitted_constant == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("space,k,lam_max", [
    (interval(PI), 1, 4e4),
    (rectangle(1.0, 1.0), 2, 4e4),
    (cone(1.0, PI), 2, 2000.0),
])
def test_karamata_on_model_spectra(space, k, lam_max):
    cf = analytic_spectrum(space, lam_max)
    rep = karamata_check(cf, k, tol=0.05)
    assert rep.holds


def test_measure_independence_quick():
    weights = [WeightSpec(), WeightSpec("affine", (1.0, 0.5))]
    rep = measure_independence_experiment(interval(PI), weights, h=PI / 300,
                                          tol=0.05)
    assert rep.holds
    assert rep.predicted == pytest.approx(1.0)
    assert max(rep.rel_errors) < 0.05
