"""Blow-up spectra, rescaled kernels, and spectral-convergence experiments."""
import math

import numpy as np
import pytest
from scipy import special

from weyllab import (RadiusOutOfDomain, WeightSpec, blowup_kernel_limit,
                     blowup_ladder, blowup_spectrum, cone, interval,
                     local_spectral_convergence_experiment,
                     shrinking_interval_example)

PI = math.pi
J01_SQ = special.jn_zeros(0, 1)[0] ** 2


def test_vertex_blowup_is_scale_free():
    # the cone is its own tangent cone: the rescaled problems at the apex
    # share one base mesh and differ by an exact scalar, so the spectra
    # agree bitwise across scales
    a = blowup_spectrum(cone(4.0, 3 * PI / 2), (0.0, 0.0), 0.2, 1.0, 8)
    b = blowup_spectrum(cone(4.0, 3 * PI / 2), (0.0, 0.0), 0.05, 1.0, 8)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_smooth_point_blowup_sees_euclidean_disk():
    # away from the apex the tangent space is flat: lambda_1 of the unit
    # blow-up ball is the first Dirichlet disk eigenvalue j_{0,1}^2
    for r in (0.2, 0.05):
        s = blowup_spectrum(cone(4.0, 3 * PI / 2), (1.0, 0.7), r, 1.0, 3)
        assert s.eigenvalues[0] == pytest.approx(J01_SQ, rel=5e-4)


def test_weighted_interval_blowup_flattens():
    # the weight is continuous at p, so rescaling freezes it: the blow-up
    # limit is the unweighted interval with lambda_1 = pi^2/4 on (-1, 1)
    w = WeightSpec("sinusoidal", (1.0, 0.5, 2.0))
    errs = []
    for r in (0.2, 0.1):
        s = blowup_spectrum(interval(2.0, w), 1.0, r, 1.0, 3)
        errs.append(abs(s.eigenvalues[0] / (PI * PI / 4) - 1.0))
    assert errs[1] < 5e-3
    assert errs[1] < errs[0]  # tightens as the scale shrinks


def test_blowup_ball_must_fit():
    with pytest.raises(RadiusOutOfDomain):
        blowup_spectrum(interval(1.0), 0.9, 0.5, 1.0, 3)


def test_interval_kernel_limit():
    # rescaled on-diagonal kernels at an interior point approach the
    # Euclidean value (4 pi t)^{-1/2} at t = 1
    est = blowup_kernel_limit(interval(12.0), 6.0, 6.0, [0.25, 0.125],
                              t=1.0, m=60)
    assert est.predicted == pytest.approx(1 / math.sqrt(4 * PI), rel=1e-12)
    assert est.limit == pytest.approx(est.predicted, rel=1e-3)


def test_kernel_limit_reuses_ladder():
    ladder = blowup_ladder(interval(12.0), 6.0, 6.0, [0.25, 0.125], m=60)
    est = blowup_kernel_limit(interval(12.0), 6.0, 6.0, [0.25, 0.125],
                              t=1.0, m=60, ladder=ladder)
    assert len(ladder.kernel_values) == 2
    assert est.limit == pytest.approx(1 / math.sqrt(4 * PI), rel=1e-3)
    assert np.all(np.asarray(ladder.b_values) > 0)


def test_shrinking_interval_example():
    rep = shrinking_interval_example(3)
    # the ball protrudes on both sides: no constraint survives, and the
    # constant function is an exact zero mode
    assert abs(rep.lam_no_boundary) <= 1e-10
    assert rep.constant_mode_deviation <= 1e-10
    assert not rep.boundary_condition_ok
    # the naive Dirichlet limit problem sits at pi^2/4 instead
    assert rep.lam_dirichlet_limit == pytest.approx(PI * PI / 4, abs=1e-3)
    assert rep.eigenfunction_sup_error < 1e-5


def test_cone_angle_family_converges():
    params = [0.2, 0.1, 0.05]
    members = [cone(1.0, PI + s) for s in params]
    out = local_spectral_convergence_experiment(
        members, 0.5, 3, cone(1.0, PI), params=params,
        boundary_condition_ok=True)
    assert out.converged
    assert np.max(out.rel_errors[-1]) < 0.02
    # eigenvalue error shrinks linearly in the angle defect
    assert out.rate == pytest.approx(1.0, abs=0.25)


def test_shrinking_family_flagged_nonconvergent():
    params = [0.5, 0.25, 0.125]
    members = [interval(2.0 - 2.0 * s) for s in params]
    out = local_spectral_convergence_experiment(
        members, 1.0, 3, interval(2.0), params=params,
        boundary_condition_ok=False)
    assert not out.converged
    assert not out.boundary_condition_ok
    # the member balls lose the boundary entirely: lambda_1 collapses to 0
    # while the limit problem keeps a Dirichlet gap
    assert np.max(out.rel_errors[-1]) > 0.5
