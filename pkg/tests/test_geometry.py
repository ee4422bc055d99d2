"""Comparison geometry: model coefficients, density, volume inequalities."""
import math

import numpy as np
import pytest

from weyllab import (check_bishop_gromov, check_doubling, check_noncollapsing,
                     cone, density_estimate, disk, interval, rectangle,
                     unit_ball_volume, volume_profile)
from weyllab.geometry import s_k, sk_volume_coefficient

PI = math.pi


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(PI)
    assert unit_ball_volume(3) == pytest.approx(4 * PI / 3)
    # interpolates through the Gamma function
    assert unit_ball_volume(2.5) == pytest.approx(
        PI**1.25 / math.gamma(2.25), rel=1e-12)


def test_s_k_limits_and_signs():
    tau = np.linspace(0.0, 1.0, 11)
    assert np.allclose(s_k(0.0, tau), tau)
    assert np.allclose(s_k(1.0, tau), np.sin(tau), atol=1e-15)
    assert np.allclose(s_k(-1.0, tau), np.sinh(tau), atol=1e-14)
    # k -> 0 is continuous
    assert s_k(1e-14, 0.7) == pytest.approx(0.7, rel=1e-10)


def test_sk_volume_coefficient_closed_forms():
    # n = 1: rho;  n = 2, k = 0: rho^2/2;  n = 2, k = 1: 1 - cos(rho)
    assert sk_volume_coefficient(5.0, 1.0, 0.8) == pytest.approx(0.8)
    assert sk_volume_coefficient(0.0, 2.0, 0.8) == pytest.approx(0.32)
    assert sk_volume_coefficient(1.0, 2.0, 0.8) == pytest.approx(
        1 - math.cos(0.8), rel=1e-12)


def test_volume_profile_matches_ball_measure():
    radii = np.linspace(0.05, 0.4, 8)
    prof = volume_profile(cone(1.0, PI), (0.0, 0.0), radii)
    assert np.allclose(prof.mu, PI * radii**2 / 2, rtol=1e-10)
    assert np.allclose(prof.b, PI * radii**2 / 6, rtol=1e-9)


@pytest.mark.parametrize("space,point,want", [
    (interval(1.0), 0.5, 1.0),
    (rectangle(1.0, 1.0), (0.3, 0.6), 1.0),
    (disk(1.0), (0.2, -0.1), 1.0),
    (cone(1.0, 3 * PI / 2), (0.0, 0.0), 0.75),  # theta/(2 pi)
])
def test_density_estimate(space, point, want):
    est = density_estimate(space, point)
    assert est.value == pytest.approx(want, rel=1e-6)


def test_density_of_weighted_interval_is_the_weight():
    from weyllab import WeightSpec
    w = WeightSpec("affine", (1.0, 2.0))
    est = density_estimate(interval(1.0, w), 0.25)
    assert est.value == pytest.approx(1.5, rel=1e-6)


@pytest.mark.parametrize("space,center", [
    (interval(1.0), 0.5),
    (rectangle(1.0, 2.0), (0.5, 1.0)),
    (disk(1.0), (0.0, 0.0)),
    (cone(1.0, PI / 2), (0.0, 0.0)),
])
def test_bishop_gromov_holds_flat(space, center):
    top = space.boundary_distance(center)
    radii = np.geomspace(top / 64, top, 24)
    rep = check_bishop_gromov(space, center, radii)
    assert rep.holds
    assert rep.worst <= rep.tolerance


def test_bishop_gromov_detects_wrong_curvature():
    # flat square against a positive-curvature model must fail at some radius
    sq = rectangle(1.0, 1.0)
    radii = np.geomspace(0.01, 0.5, 24)
    rep = check_bishop_gromov(sq, (0.5, 0.5), radii, curvature=6.0, n=2.0)
    assert not rep.holds


def test_doubling_and_noncollapsing():
    c = cone(1.0, PI)
    assert check_doubling(c, (0.0, 0.0), 0.1, 0.4).holds
    rep = check_noncollapsing(c, seed=3)
    assert rep.holds
    # the advertised lower bound is theta/2 * r^2 at the vertex sector scale
    assert rep.worst <= 0.0


def test_noncollapsing_seed_reproducible():
    a = check_noncollapsing(disk(1.0), seed=11)
    b = check_noncollapsing(disk(1.0), seed=11)
    assert a.worst == b.worst
    assert a.quantities["c_min"] == b.quantities["c_min"]
    pa, ra = a.quantities["minimizer"]
    pb, rb = b.quantities["minimizer"]
    assert ra == rb and np.array_equal(pa, pb)
