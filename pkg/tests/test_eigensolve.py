"""Eigensolvers and counting functions against the analytic spectra."""
import math

import numpy as np
import pytest
from scipy import special

from weyllab import (WeightSpec, analytic_spectrum, assemble, bessel_zeros,
                     build_mesh, cone, counting_by_inertia,
                     counting_from_spectrum, disk, inertia_count, interval,
                     lowest_eigs, rectangle)

PI = math.pi


# ---------------------------------------------------------------------------
# discrete spectra against exact eigenvalues
# ---------------------------------------------------------------------------


def test_interval_modes_match_squares(interval_spec):
    m = np.arange(1, 26)
    rel = np.abs(interval_spec.eigenvalues / m**2 - 1.0)
    # P1 elements overshoot by ~ lambda h^2 / 12 at this resolution
    assert rel.max() < 5e-3
    assert np.all(interval_spec.eigenvalues[:-1] < interval_spec.eigenvalues[1:])


def test_square_modes_match_lattice(square_spec):
    exact = analytic_spectrum(rectangle(1.0, 1.0), 900.0).eigenvalues[:40]
    rel = np.abs(square_spec.eigenvalues / exact - 1.0)
    # dispersion grows like lambda h^2: ~1% at the bottom, a few percent
    # by mode 40 on this mesh
    assert rel[:5].max() < 1.2e-2
    assert rel.max() < 8e-2
    assert np.all(np.diff(square_spec.eigenvalues) > -1e-12)


def test_disk_modes_match_bessel_zeros():
    spec = lowest_eigs(assemble(build_mesh(disk(1.0), 1 / 24)), 6,
                       want_vectors=False)
    exact = analytic_spectrum(disk(1.0), 60.0).eigenvalues[:6]
    assert np.abs(spec.eigenvalues / exact - 1.0).max() < 1e-2


def test_cone_modes_match_wrapped_bessel():
    # full cone of angle theta: angular frequencies nu = 2 pi k / theta
    spec = lowest_eigs(assemble(build_mesh(cone(1.0, PI), 1 / 24)), 6,
                       want_vectors=False)
    exact = analytic_spectrum(cone(1.0, PI), 80.0).eigenvalues[:6]
    assert np.abs(spec.eigenvalues / exact - 1.0).max() < 1e-2


def test_analytic_cone_spectrum_structure():
    eigs = analytic_spectrum(cone(1.0, PI), 80.0).eigenvalues
    j01, j21, j02 = (special.jn_zeros(0, 2)[0], special.jn_zeros(2, 1)[0],
                     special.jn_zeros(0, 2)[1])
    assert eigs[0] == pytest.approx(j01**2, rel=1e-12)
    # nu = 2 modes come in cos/sin pairs
    assert eigs[1] == pytest.approx(j21**2, rel=1e-12)
    assert eigs[2] == pytest.approx(j21**2, rel=1e-12)
    assert eigs[3] == pytest.approx(j02**2, rel=1e-12)


def test_dense_and_shift_invert_agree():
    # same operator just over the dense-path cutoff
    op = assemble(build_mesh(rectangle(1.0, 1.0), 1 / 46))
    si = lowest_eigs(op, 12, want_vectors=False)
    assert si.method == "shift-invert"
    dense = lowest_eigs(op, op.n_free, want_vectors=False)
    assert dense.method == "dense"
    assert np.abs(si.eigenvalues / dense.eigenvalues[:12] - 1.0).max() < 1e-9


def test_certification_and_residuals(interval_spec):
    assert interval_spec.certified_complete
    assert interval_spec.residuals.max() < 1e-8


def test_eigenfunction_orthonormality(interval_op):
    # eigenfunctions come scattered to the full node set (zero on Dirichlet
    # nodes), orthonormal against the full mass matrix
    spec = lowest_eigs(interval_op, 6)
    V = spec.eigenfunctions
    assert V.shape[0] == interval_op.mesh.n_nodes
    G = V.T @ (interval_op.mass_full @ V)
    assert np.allclose(G, np.eye(6), atol=1e-8)


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------


def test_inertia_count_matches_spectrum(square_op, square_spec):
    eigs = square_spec.eigenvalues
    for lam in (30.0, 100.0, 260.0):
        assert inertia_count(square_op, lam) == int((eigs < lam).sum())


def test_inertia_counts_monotone(square_op):
    grid = np.linspace(20.0, 400.0, 12)
    cf = counting_by_inertia(square_op, grid)
    assert np.all(np.diff(cf.counts) >= 0)
    assert cf.source == "inertia"


def test_counting_from_spectrum_jump_semantics(interval_spec):
    cf = counting_from_spectrum(interval_spec)
    lam1 = interval_spec.eigenvalues[0]
    assert cf.count(lam1) == 1          # right-continuous: N(lambda_1) = 1
    assert cf.count(lam1 - 1e-9) == 0
    assert cf.count(0.0) == 0


def test_analytic_counting_matches_direct_count():
    cf = analytic_spectrum(interval(PI), 1000.0)
    # N(lambda) = floor(sqrt(lambda)) for the unit-weight (0, pi) interval
    for lam in (10.0, 99.9, 400.0, 987.0):
        assert cf.count(lam) == int(math.floor(math.sqrt(lam)))
    assert cf.band_limit == 1000.0


def test_counting_grid_below_range_raises(square_op):
    cf = counting_by_inertia(square_op, np.linspace(50.0, 100.0, 4))
    with pytest.raises(ValueError):
        cf.count(10.0)


# ---------------------------------------------------------------------------
# Bessel utilities
# ---------------------------------------------------------------------------


def test_bessel_zeros_match_scipy_for_integer_order():
    for nu in (0, 1, 5):
        want = special.jn_zeros(nu, 4)
        got = bessel_zeros(float(nu), float(want[-1]) + 1e-9)
        assert np.allclose(got[:4], want, rtol=1e-12)


def test_bessel_zeros_interlace_for_fractional_order():
    # zeros of J_nu and J_{nu+1} strictly interlace
    a = bessel_zeros(0.5, 30.0)
    b = bessel_zeros(1.5, 30.0)
    for k in range(min(len(a), len(b)) - 1):
        assert a[k] < b[k] < a[k + 1]


def test_weighted_interval_low_modes_shift():
    # a heavier measure slows diffusion: eigenvalues drop below m^2
    w = WeightSpec("affine", (2.0, 0.0))  # measure 2 dx, same energy? no:
    # both forms scale by 2, so the spectrum is unchanged
    spec = lowest_eigs(assemble(build_mesh(interval(PI, w), PI / 200)), 5,
                       want_vectors=False)
    assert np.abs(spec.eigenvalues / np.arange(1, 6) ** 2 - 1.0).max() < 1e-3
