"""Discrete operators: matrix entries, weights, rescaling, polar hubs."""
import math

import numpy as np
import pytest

from weyllab import (WeightSpec, assemble, build_mesh, cone, disk, interval,
                     rectangle)

PI = math.pi


def test_interval_tridiagonal_entries():
    # uniform unit-weight interval: K = (1/h) tridiag(-1, 2, -1),
    # M = (h/6) tridiag(1, 4, 1) on the free nodes
    op = assemble(build_mesh(interval(1.0), 0.25))
    h = 0.25
    K = op.stiffness.toarray()
    M = op.mass.toarray()
    n = op.n_free
    want_K = (np.diag(np.full(n, 2.0)) + np.diag(np.full(n - 1, -1.0), 1)
              + np.diag(np.full(n - 1, -1.0), -1)) / h
    want_M = (np.diag(np.full(n, 4.0)) + np.diag(np.full(n - 1, 1.0), 1)
              + np.diag(np.full(n - 1, 1.0), -1)) * h / 6
    assert np.allclose(K, want_K, atol=1e-14)
    assert np.allclose(M, want_M, atol=1e-16)


def test_matrices_symmetric_positive():
    for space, h in [(rectangle(1.0, 1.0), 1 / 8), (disk(1.0), 1 / 8),
                     (cone(1.0, PI), 1 / 8)]:
        op = assemble(build_mesh(space, h))
        K, M = op.stiffness, op.mass
        assert abs(K - K.T).max() < 1e-12
        assert abs(M - M.T).max() < 1e-14
        v = np.linspace(1.0, 2.0, op.n_free)
        assert v @ (K @ v) > 0
        assert v @ (M @ v) > 0


def test_mass_total_is_the_measure():
    # row sums of the full mass matrix integrate the hat partition of unity
    w = WeightSpec("sinusoidal", (1.0, 0.5, 1.0))
    op = assemble(build_mesh(interval(PI, w), PI / 200))
    assert op.mass_full.sum() == pytest.approx(PI + 1.0, rel=1e-4)


def test_weight_override_matches_weighted_space():
    w = WeightSpec("affine", (1.0, 0.5))
    mesh = build_mesh(interval(1.0), 0.05)
    a = assemble(build_mesh(interval(1.0, w), 0.05))
    b = assemble(mesh, weight=w)
    assert np.allclose(a.stiffness.toarray(), b.stiffness.toarray())
    assert np.allclose(a.mass.toarray(), b.mass.toarray())


def test_rescaled_is_exact_scaling():
    # metric scale alpha, measure scale beta: K -> (beta/alpha^2) K,
    # M -> beta M, exactly (entries are multiplied, not reassembled)
    op = assemble(build_mesh(interval(1.0), 0.1))
    alpha, beta = 0.25, 0.0625
    r = op.rescaled(alpha, beta)
    assert np.array_equal(r.stiffness.toarray(),
                          (beta / alpha**2) * op.stiffness.toarray())
    assert np.array_equal(r.mass.toarray(), beta * op.mass.toarray())
    assert r.scale == (alpha, beta)
    with pytest.raises(ValueError):
        op.rescaled(-1.0, 1.0)


def test_polar_hub_row_couples_full_ring():
    op = assemble(build_mesh(cone(1.0, PI), 1 / 10))
    mesh = op.mesh
    hub = int(np.flatnonzero(mesh.nodes[:, 0] == 0.0)[0])
    free_index = {g: i for i, g in enumerate(op.free_nodes)}
    assert hub in free_index  # the apex is interior
    row = op.stiffness.getrow(free_index[hub])
    # coupled to every first-ring node
    assert row.getnnz() >= mesh.params["nphi"]
    lumped = np.asarray(op.mass.sum(axis=1)).ravel()
    assert lumped[free_index[hub]] > 0


def test_free_nodes_exclude_dirichlet_boundary():
    mesh = build_mesh(rectangle(1.0, 1.0), 1 / 8)
    op = assemble(mesh)
    assert op.n_free == (~mesh.boundary_mask).sum()
    assert not mesh.boundary_mask[op.free_nodes].any()
