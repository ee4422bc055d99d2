"""Meshing: measure bookkeeping, ball restrictions, refinement, failure modes."""
import math

import numpy as np
import pytest

from weyllab import (BallDomain, ResolutionTooCoarse, UnsupportedDomain,
                     build_mesh, cone, disk, interval, rectangle, refine)

PI = math.pi


@pytest.mark.parametrize("space,h", [
    (interval(PI), PI / 50),
    (rectangle(1.0, 2.0), 1 / 20),
    (disk(1.0), 1 / 16),
    (cone(1.0, 3 * PI / 2), 1 / 16),
])
def test_element_measures_sum_to_the_space(space, h):
    mesh = build_mesh(space, h)
    assert mesh.element_measure.sum() == pytest.approx(
        space.geometric_measure(), rel=5e-3)
    assert np.all(mesh.element_measure > 0)


def test_interval_mesh_nodes_and_boundary():
    mesh = build_mesh(interval(1.0), 0.1)
    assert mesh.nodes[0] == 0.0 and mesh.nodes[-1] == 1.0
    assert mesh.boundary_mask[0] and mesh.boundary_mask[-1]
    assert not mesh.boundary_mask[1:-1].any()
    assert np.all(np.diff(mesh.nodes.ravel()) > 0)


def test_refine_halves_h_and_preserves_measure():
    mesh = build_mesh(rectangle(1.0, 1.0), 1 / 8)
    fine = refine(mesh)
    assert fine.h == pytest.approx(mesh.h / 2)
    assert fine.element_measure.sum() == pytest.approx(
        mesh.element_measure.sum(), rel=1e-12)


def test_resolution_too_coarse():
    # h so large the interval has no interior node
    with pytest.raises(ResolutionTooCoarse):
        build_mesh(interval(1.0), 1.5)


# ---------------------------------------------------------------------------
# ball restrictions
# ---------------------------------------------------------------------------


def test_interval_ball_domain_interior():
    # strict interior ball: both cut points become Dirichlet nodes
    mesh = build_mesh(interval(2.0), 0.01, domain=BallDomain(1.0, 0.5))
    xs = mesh.nodes.ravel()
    assert xs.min() == pytest.approx(0.5)
    assert xs.max() == pytest.approx(1.5)
    assert mesh.boundary_mask[np.argmin(xs)] and mesh.boundary_mask[np.argmax(xs)]


def test_interval_ball_domain_touching_endpoint_is_dirichlet():
    # the cut landing exactly on the host boundary keeps the Dirichlet node
    mesh = build_mesh(interval(2.0), 0.01, domain=BallDomain(0.5, 0.5))
    xs = mesh.nodes.ravel()
    assert xs.min() == pytest.approx(0.0)
    assert mesh.boundary_mask[np.argmin(xs)]


def test_interval_ball_domain_protruding_is_free():
    # a cut beyond the host endpoint leaves no constraint on that side:
    # the metric ball of the space is a half-open interval there
    mesh = build_mesh(interval(2.0), 0.01, domain=BallDomain(0.25, 0.5))
    xs = mesh.nodes.ravel()
    assert xs.min() == pytest.approx(0.0)
    assert not mesh.boundary_mask[np.argmin(xs)]
    assert mesh.boundary_mask[np.argmax(xs)]


def test_centered_ball_domains_on_polar_meshes():
    mesh = build_mesh(disk(2.0), 1 / 16, domain=BallDomain((0.0, 0.0), 1.0))
    assert mesh.element_measure.sum() == pytest.approx(PI, rel=1e-10)
    vmesh = build_mesh(cone(2.0, PI), 1 / 16, domain=BallDomain((0.0, 0.0), 1.0))
    assert vmesh.element_measure.sum() == pytest.approx(PI / 2, rel=1e-10)


def test_ball_domain_missing_the_space_raises():
    with pytest.raises(UnsupportedDomain):
        build_mesh(interval(1.0), 0.01, domain=BallDomain(2.0, 0.1))


def test_offcenter_polar_and_rectangle_restrictions_not_supported():
    with pytest.raises(UnsupportedDomain):
        build_mesh(cone(1.0, PI), 0.05, domain=BallDomain((0.5, 0.1), 0.2))
    with pytest.raises(UnsupportedDomain):
        build_mesh(rectangle(2.0, 2.0), 1 / 24, domain=BallDomain((1.0, 1.0), 0.5))


def test_cone_mesh_vertex_hub():
    mesh = build_mesh(cone(1.0, PI), 1 / 12)
    # the apex is one node shared by a full ring of elements
    assert int((mesh.nodes[:, 0] == 0.0).sum()) == 1
    assert mesh.hub_count == mesh.params["nphi"]
