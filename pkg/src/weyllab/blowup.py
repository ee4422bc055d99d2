"""Tangent-cone blow-ups by exact rescaling, and spectral (non)convergence.

Zooming in at p by the factor 1/r turns the ball B_R(p) of the rescaled
space into B_{rR}(p) of the original; eigenvalues pick up exactly r^2 and
the measure normalization mu -> mu / b(p,r) touches kernels only.  Where
the local geometry is scale-compatible (cone vertex, unit-weight interval)
one base operator serves every scale through the discrete rescaling
identity; everywhere else the ball is remeshed at scale r.

The shrinking-interval family lives here too: metric balls that never see
the boundary keep lambda_1 = 0 while their limit interval is genuinely
Dirichlet — the classic failure of local spectral convergence when the
boundary condition degenerates.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from .asymptotics import LimitEstimate, _extrapolate
from .errors import RadiusOutOfDomain, UnsupportedSpace
from .eigensolve import Spectrum, lowest_eigs
from .heat import kernel_diagonal
from .meshing import BallDomain, build_mesh
from .spaces import SpaceSpec, WeightSpec, b_function, cone, disk, interval

__all__ = [
    "blowup_pair",
    "BlowupLadder",
    "blowup_operator",
    "blowup_spectrum",
    "blowup_ladder",
    "blowup_kernel_limit",
    "shrinking_interval_example",
    "ShrinkingIntervalReport",
    "local_spectral_convergence_experiment",
    "LocalConvergenceReport",
]


def _check_scale(space: SpaceSpec, p, rr: float) -> None:
    """B_{rR}(p) must sit inside the space (and inside one chart)."""
    if rr <= 0:
        raise RadiusOutOfDomain("scale * ball radius must be positive")
    q = space.as_point(p)
    if space.kind == "cone" and q[0] <= 1e-14:
        if rr > space.lengths[0] * (1 + 1e-12):
            raise RadiusOutOfDomain(
                f"vertex ball radius {rr:g} exceeds the cone radius {space.lengths[0]:g}"
            )
        return
    limit = space.boundary_distance(q)
    inj = space.injectivity_radius(q)
    if inj is not None:
        limit = min(limit, inj)
    if rr > limit * (1 + 1e-12):
        raise RadiusOutOfDomain(
            f"ball radius {rr:g} exceeds the flat neighbourhood {limit:g} of p"
        )


def _scaled_weight(space: SpaceSpec, p, rr: float) -> Optional[WeightSpec]:
    """Weight of the remeshed ball, pulled back to local coordinates."""
    w = space.weight
    if w.is_unit:
        return WeightSpec()
    if space.kind == "interval":
        x0 = space.as_point(p) - rr
        return WeightSpec("custom", function=lambda x: w(x0 + np.asarray(x)))
    q = space.as_point(p)
    if space.kind in ("disk", "rectangle"):
        return WeightSpec("custom",
                          function=lambda x, y: w(q[0] + np.asarray(x), q[1] + np.asarray(y)))
    # cone interior point: local cartesian frame (u radial, v transverse)
    rho0, phi0 = q

    def pulled(x, y):
        rho = np.hypot(rho0 + np.asarray(x), np.asarray(y))
        phi = phi0 + np.arctan2(np.asarray(y), rho0 + np.asarray(x))
        return w(rho, phi)

    return WeightSpec("custom", function=pulled)


def _ball_resolution(m: int) -> int:
    """Radial element count giving ~<<1% accuracy over the first m modes."""
    return max(32, 8 * int(math.ceil(math.sqrt(m))))


def _scale_compatible(space: SpaceSpec, q) -> bool:
    if space.kind == "interval":
        return space.weight.is_unit
    return space.kind == "cone" and (q[0] if hasattr(q, "__len__") else q) <= 1e-14


def blowup_operator(space: SpaceSpec, p, r: float, R: float, m: int):
    """Discrete operator of B_{rR}(p) under the original metric d.

    Returns (operator, local point) where the local point addresses p in
    the ball's own chart.  Scale-compatible geometries reuse a unit-scale
    base mesh via the exact rescaling identity.
    """
    rr = r * R
    _check_scale(space, p, rr)
    q = space.as_point(p)
    from .assembly import assemble

    if space.kind == "interval":
        if space.weight.is_unit:
            # rescaled base: the mesh keeps unit-scale coordinates, so the
            # centre of the physical ball addresses the base-mesh centre R
            base = build_mesh(interval(2.0 * R), 2.0 * R / (200 * max(1, m // 20 + 1)))
            op = assemble(base).rescaled(r, r)
            return op, R
        ball = interval(2.0 * rr, weight=_scaled_weight(space, p, rr))
        mesh = build_mesh(ball, 2.0 * rr / (200 * max(1, m // 20 + 1)))
        return assemble(mesh), rr
    if space.kind == "cone" and q[0] <= 1e-14:
        if not space.weight.is_unit:
            raise UnsupportedSpace("vertex blow-ups assume a unit weight")
        n_r = _ball_resolution(m)
        base = build_mesh(cone(R, space.angle), R / n_r)
        op = assemble(base).rescaled(r, r * r)
        return op, (0.0, 0.0)
    if space.kind in ("cone", "disk"):
        ball = disk(rr, weight=_scaled_weight(space, p, rr))
        mesh = build_mesh(ball, rr / _ball_resolution(m))
        return assemble(mesh), (0.0, 0.0)
    raise UnsupportedSpace(f"no blow-up path for {space.kind}")


def blowup_pair(space: SpaceSpec, p, r: float, R: float, m: int):
    """(spectrum of B_{rR}(p), blow-up spectrum), sharing one base operator.

    Scale-compatible geometries solve the unit-scale base pencil once and
    map its eigenvalues through the exact rescaling identity lambda/r^2;
    everywhere else the ball's own operator is solved and only the final
    r^2 factor is algebraic.
    """
    q = space.as_point(p)
    from .assembly import assemble

    if _scale_compatible(space, q):
        _check_scale(space, p, r * R)
        if space.kind == "interval":
            base_mesh = build_mesh(interval(2.0 * R),
                                   2.0 * R / (200 * max(1, m // 20 + 1)))
        else:
            base_mesh = build_mesh(cone(R, space.angle), R / _ball_resolution(m))
        base = lowest_eigs(assemble(base_mesh), m, want_vectors=False)
        ball_eigs = base.eigenvalues / (r * r)
    else:
        op, _ = blowup_operator(space, p, r, R, m)
        base = lowest_eigs(op, m, want_vectors=False)
        ball_eigs = base.eigenvalues
    ball = dataclasses.replace(base, eigenvalues=ball_eigs)
    blown = dataclasses.replace(base, eigenvalues=(r * r) * ball_eigs)
    return ball, blown


def blowup_spectrum(space: SpaceSpec, p, r: float, R: float, m: int) -> Spectrum:
    """Dirichlet spectrum of B_R(p) in the r-rescaled space.

    Exactly r^2 times the spectrum of B_{rR}(p) under the original metric;
    the measure normalization by b(p,r) cancels from the eigenvalue problem.
    """
    return blowup_pair(space, p, r, R, m)[1]


@dataclasses.dataclass
class BlowupLadder:
    """Blow-up data along a decreasing ladder of scales."""

    space: SpaceSpec
    point: object
    ball_radius: float
    scales: np.ndarray
    spectra: list                  # rescaled-space spectra, one per scale
    kernel_values: np.ndarray      # H^{(rR)}(p,p,r^2 t) * b(p,r)
    b_values: np.ndarray
    time: float


def blowup_ladder(space: SpaceSpec, p, R: float, scales, m: int = 40,
                  t: float = 1.0, rel_budget: float = 1e-3) -> BlowupLadder:
    """Spectra and normalized kernel diagonals across blow-up scales."""
    rs = np.asarray(scales, dtype=float)
    if np.any(np.diff(rs) >= 0):
        raise ValueError("scales must decrease")
    spectra, kvals, bvals = [], [], []
    for r in rs:
        op, p_local = blowup_operator(space, p, float(r), R, m)
        spec = lowest_eigs(op, m)
        diag = kernel_diagonal(spec, p_local, [r * r * t], rel_budget=rel_budget)
        b = b_function(space, p, float(r))
        spectra.append(dataclasses.replace(spec, eigenvalues=spec.eigenvalues * r * r,
                                           eigenfunctions=None))
        kvals.append(diag.values[0] * b)
        bvals.append(b)
    return BlowupLadder(space, p, R, rs, spectra, np.array(kvals), np.array(bvals), t)


def blowup_kernel_limit(space: SpaceSpec, p, R: float, scales, t: float = 1.0,
                        m: int = 40, rel_budget: float = 1e-3,
                        ladder: Optional[BlowupLadder] = None) -> LimitEstimate:
    """lim_r H^{(rR)}(p,p,r^2 t) * b(p,r) against omega_k/((k+1)(4 pi)^{k/2}).

    The b-normalization absorbs the density theta_k, so the constant is
    universal; the ball radius R should exceed ~5 sqrt(t) or the Dirichlet
    deficit of the finite ball contaminates the plateau.
    """
    if ladder is None:
        ladder = blowup_ladder(space, p, R, scales, m=m, t=t, rel_budget=rel_budget)
    k = space.dim
    from .geometry import unit_ball_volume

    predicted = unit_ball_volume(k) / ((k + 1.0) * (4.0 * math.pi * t) ** (k / 2.0))
    return _extrapolate("diagonal-limit", ladder.scales, ladder.kernel_values,
                        None, None, predicted)


# ---------------------------------------------------------------------------
# the shrinking-interval family
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class ShrinkingIntervalReport:
    j: int
    lam_no_boundary: float
    lam_dirichlet_limit: float
    constant_mode_deviation: float      # sup deviation of phi_0 from constant
    eigenfunction_sup_error: float      # FEM phi_1 of the limit vs cos(pi t/2)
    boundary_condition_ok: bool         # the Prop.-style boundary identity


def shrinking_interval_example(j: int, n: int = 1600,
                               n_free: int = 200) -> ShrinkingIntervalReport:
    """X_j = [-1+1/j, 1-1/j] with B_1(0) = X_j versus the limit (-1, 1).

    The metric ball B_1(0) in X_j has empty boundary, so no Dirichlet
    constraint applies and the constant function is an eigenvector with
    eigenvalue 0.  The limit interval carries honest Dirichlet conditions
    and lambda_1 = pi^2/4 with eigenfunction cos(pi t / 2): spectra do not
    converge, because the boundary-condition identity fails in the limit.
    """
    from .assembly import assemble

    if j < 2:
        raise ValueError("need j >= 2")
    length_j = 2.0 - 2.0 / j
    ball = BallDomain(length_j / 2.0, 1.0)
    # the zero mode is structural (constant in the stiffness null space);
    # keep this mesh modest so round-off stays below the 1e-10 read-out
    mesh_j = build_mesh(interval(length_j), length_j / n_free, domain=ball)
    spec_j = lowest_eigs(assemble(mesh_j), 2)
    phi0 = spec_j.eigenfunctions[:, 0]
    dev = float(np.max(np.abs(phi0 - phi0.mean())) / np.abs(phi0.mean()))

    mesh_inf = build_mesh(interval(2.0), 2.0 / n)
    spec_inf = lowest_eigs(assemble(mesh_inf), 2)
    nodes = np.asarray(mesh_inf.nodes, dtype=float).reshape(-1) - 1.0
    exact = np.cos(0.5 * math.pi * nodes)
    sup_err = float(np.max(np.abs(spec_inf.eigenfunctions[:, 0] - exact)))

    return ShrinkingIntervalReport(j, float(spec_j.eigenvalues[0]),
                                   float(spec_inf.eigenvalues[0]), dev, sup_err,
                                   boundary_condition_ok=False)


# ---------------------------------------------------------------------------
# local spectral convergence across a space family
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class LocalConvergenceReport:
    params: np.ndarray              # family parameter (e.g. 1/j), decreasing
    eigenvalues: np.ndarray         # len(params) x m table
    limit_eigenvalues: np.ndarray
    rel_errors: np.ndarray          # worst over the m modes, per family member
    rate: Optional[float]           # slope of log err vs log param
    converged: bool
    boundary_condition_ok: bool
    tolerance: float


def _family_mesh(space: SpaceSpec, R: float, p, fine: bool):
    q = space.as_point(p) if p is not None else None
    if space.kind == "interval":
        center = q if q is not None else space.lengths[0] / 2.0
        n = 2400 if fine else 1200
        return build_mesh(space, space.lengths[0] / n, domain=BallDomain(center, R))
    n_r = 72 if fine else 36
    return build_mesh(space, R / n_r, domain=BallDomain((0.0, 0.0), R))


def local_spectral_convergence_experiment(
        family: Sequence[SpaceSpec], R: float, m: int, limit: SpaceSpec,
        p=None, params=None, boundary_condition_ok: bool = True,
        tol: float = 0.02) -> LocalConvergenceReport:
    """lambda_{i,j}^{(R)} across a space family against the limit space.

    Meshes B_R(p) in every family member and in the limit space, solves for
    the lowest m modes, and reports per-member worst relative deviations
    plus a log-log rate in the family parameter.  Whether the limit ball's
    boundary condition survives the limit is supplied analytically by the
    caller, not inferred; a False flag plus non-decreasing errors marks the
    Example-1.5 phenomenon.
    """
    from .assembly import assemble

    if params is None:
        params = 1.0 / np.arange(1, len(family) + 1)
    params = np.asarray(params, dtype=float)
    lam_inf = lowest_eigs(assemble(_family_mesh(limit, R, p, fine=True)),
                          m, want_vectors=False).eigenvalues
    rows = []
    for spc in family:
        lam = lowest_eigs(assemble(_family_mesh(spc, R, p, fine=False)),
                          m, want_vectors=False).eigenvalues
        rows.append(lam)
    table = np.vstack(rows)
    with np.errstate(divide="ignore"):
        rel = np.max(np.abs(table / lam_inf - 1.0), axis=1)
    good = rel > 0
    rate = None
    if good.sum() >= 2 and np.all(rel[good] < np.inf):
        rate = float(np.polyfit(np.log(params[good]), np.log(rel[good]), 1)[0])
    converged = bool(rel[-1] <= tol and (len(rel) < 2 or rel[-1] <= rel[0]))
    return LocalConvergenceReport(params, table, lam_inf, rel, rate,
                                  converged and boundary_condition_ok,
                                  boundary_condition_ok, tol)
