"""Heat traces and on-diagonal kernels against direct series summation."""
import math

import numpy as np
import pytest

from weyllab import (DomainTooSmall, GrowthBound, TailModelMissing,
                     TimeTooSmall, analytic_spectrum, assemble, build_mesh,
                     check_gaussian_shape, check_kernel_monotonicity,
                     check_rescaling_identity, check_tail_decay, disk,
                     heat_trace, interval, kernel_diagonal, lowest_eigs,
                     rectangle, trace_diagonal_consistency,
                     vertex_kernel_series)

PI = math.pi

# direct summation of sum_m exp(-m^2), converged to all shown digits
TRACE_PI_AT_1 = sum(math.exp(-m * m) for m in range(1, 12))

# p_(0,1)(t=0.05; 1/2, 1/2) = sum_m 2 sin^2(m pi/2) exp(-m^2 pi^2 t);
# the images formula 1/sqrt(4 pi t) sum_k (e^{-k^2/t} - e^{-(k+1/2)^2 ... })
# gives the same 1.2445655 to seven digits
KERNEL_HALF_AT_005 = 1.2445655330056031


def test_trace_of_analytic_interval_spectrum():
    eigs = (np.arange(1, 40, dtype=float)) ** 2
    tr = heat_trace(eigs, [1.0])
    assert tr.values[0] == pytest.approx(TRACE_PI_AT_1, abs=1e-10)
    assert tr.values[0] == pytest.approx(0.386319, abs=1e-5)


def test_trace_is_decreasing_and_bracketed(interval_spec):
    times = np.array([0.25, 0.5, 1.0, 2.0])
    tr = heat_trace(interval_spec, times)
    assert np.all(np.diff(tr.values) < 0)
    assert np.all(tr.lower <= tr.values) and np.all(tr.values <= tr.upper)


def test_truncated_trace_needs_a_tail_model():
    eigs = (np.arange(1, 11, dtype=float)) ** 2
    with pytest.raises(TailModelMissing):
        heat_trace(eigs, [0.05])
    # N(lambda) <= sqrt(lambda) on (0, pi): a growth bound restores validity
    tr = heat_trace(eigs, [0.05], tail=GrowthBound(1.0, 0.5))
    exact = sum(math.exp(-m * m * 0.05) for m in range(1, 200))
    assert tr.lower[0] <= exact <= tr.upper[0]


def test_fem_kernel_matches_sine_series():
    spec = lowest_eigs(assemble(build_mesh(interval(1.0), 1 / 400)), 25)
    kd = kernel_diagonal(spec, 0.5, [0.05], rel_budget=1e-3)
    assert kd.values[0] == pytest.approx(KERNEL_HALF_AT_005, rel=2e-4)


def test_kernel_budget_enforced():
    spec = lowest_eigs(assemble(build_mesh(interval(1.0), 1 / 100)), 5)
    with pytest.raises(TimeTooSmall):
        kernel_diagonal(spec, 0.5, [0.001], rel_budget=1e-6)
    # the same request with the check disabled returns (biased) numbers
    kd = kernel_diagonal(spec, 0.5, [0.001], check_budget=False)
    assert kd.values[0] > 0


def test_vertex_series_values():
    # cone of angle theta: t * H(vertex) -> 1/(2 theta); boundary corrections
    # are exponentially small at t = 0.05 on the unit cone
    H = vertex_kernel_series(PI, 1.0, [0.05])[0]
    assert 0.05 * H == pytest.approx(1 / (2 * PI), rel=1e-7)
    H2 = vertex_kernel_series(2 * PI, 1.0, [0.05])[0]
    assert 4 * PI * 0.05 * H2 == pytest.approx(1.0, rel=1e-6)


def test_vertex_value_scales_inversely_with_angle():
    t = 0.05
    for theta in (PI / 2, PI, 3 * PI / 2):
        H = vertex_kernel_series(theta, 1.0, [t])[0]
        assert t * H == pytest.approx(1 / (2 * theta), rel=1e-6)


def test_domain_monotonicity_of_kernels():
    # Dirichlet kernels grow with the domain at fixed diagonal point
    inner = kernel_diagonal(
        lowest_eigs(assemble(build_mesh(interval(1.0), 1 / 200)), 20),
        0.5, [0.05, 0.1, 0.2], rel_budget=1e-3)
    outer = kernel_diagonal(
        lowest_eigs(assemble(build_mesh(interval(2.0), 1 / 200)), 25),
        0.5, [0.05, 0.1, 0.2], rel_budget=1e-3)
    rep = check_kernel_monotonicity(inner, outer, tol=1e-8)
    assert rep.holds
    assert np.all(rep.outer >= rep.inner - 1e-8)


def test_rescaling_identity_exact(interval_op):
    rep = check_rescaling_identity(interval_op, 2.0, 4.0, PI / 2, 0.5, m=10)
    assert rep.holds
    assert rep.eigenvalue_rel_err < 1e-11
    assert rep.kernel_rel_err < 1e-10


def test_gaussian_shape_bound(square_spec):
    kd = kernel_diagonal(square_spec, (0.5, 0.5), [0.05, 0.1], rel_budget=1e-2)
    rep = check_gaussian_shape(kd, rectangle(1.0, 1.0), (0.5, 0.5))
    assert rep.holds
    # normalized values stay under the Euclidean ceiling
    assert np.all(rep.values <= rep.bound + 1e-9)
    assert np.all(rep.values > 0)


def test_tail_decay_is_gaussian():
    # r-grid must leave a 5*sqrt(t) margin to the boundary and keep the
    # outside mass above roundoff
    rep = check_tail_decay(interval(1.0), 0.5, 0.002, np.linspace(0.05, 0.25, 7))
    assert rep.holds
    # log outside-mass falls at least like -r^2/(4t) past r0
    assert rep.slope < 0


def test_tail_decay_domain_guard():
    with pytest.raises(DomainTooSmall):
        check_tail_decay(disk(1.0), (0.0, 0.0), 0.01, np.linspace(0.5, 2.0, 5))


def test_trace_diagonal_consistency(interval_spec):
    d = trace_diagonal_consistency(interval_spec, [0.5, 1.0])
    assert np.allclose(d["trace"], d["consistent"], rtol=1e-10)
    # mass lumping perturbs the quadrature only mildly
    assert np.allclose(d["trace"], d["lumped"], rtol=1e-3)


def test_trace_agrees_with_analytic_tail():
    # FEM trace of (0, pi) against the directly summed series
    spec = lowest_eigs(assemble(build_mesh(interval(PI), PI / 400)), 25)
    tr = heat_trace(spec, [1.0])
    assert tr.values[0] == pytest.approx(TRACE_PI_AT_1, rel=1e-4)
