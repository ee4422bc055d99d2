"""Heat traces and diagonal kernels from spectral expansions.

Everything is a finite eigensum Z(t) = sum e^{-lam t} or
H(p,p,t) = sum e^{-lam t} phi(p)^2 with explicit truncation control: a
polynomial growth model N(lam) <= C lam^s turns the omitted tail into a
computable incomplete-gamma bracket, and the kernel's tail uses the
sup-norm growth ||phi_m||_inf <= c lam_m observed on the computed modes.

Also here: domain monotonicity and rescaling-identity checks (both are
statements about pairs of expansions), the exponential tail-decay
diagnostic on exactly summable hosts, and the Gaussian-shape boundedness
check H(p,p,t) * mu(B_sqrt(t)(p)).
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import gammaincc, jv

from .eigensolve import Spectrum, bessel_zeros
from .errors import DomainTooSmall, TailModelMissing, TimeTooSmall
from .spaces import SpaceSpec, ball_measure

__all__ = [
    "GrowthBound",
    "HeatTrace",
    "heat_trace",
    "KernelDiagonal",
    "kernel_diagonal",
    "check_kernel_monotonicity",
    "check_rescaling_identity",
    "check_tail_decay",
    "check_gaussian_shape",
    "trace_diagonal_consistency",
    "vertex_kernel_series",
]


@dataclasses.dataclass(frozen=True)
class GrowthBound:
    """Counting-function growth model N(lam) <= constant * lam**exponent."""

    constant: float
    exponent: float

    @classmethod
    def from_eigenvalues(cls, eigenvalues, exponent: Optional[float] = None,
                         safety: float = 1.2) -> "GrowthBound":
        """Envelope fit over a computed spectrum.

        With the exponent given (k/2 for a k-dimensional space) the constant
        is the largest observed m / lam_m**s, inflated by ``safety``; a free
        exponent is obtained by log-log regression over the top half first.
        """
        lam = np.asarray(eigenvalues, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("growth fit needs positive eigenvalues")
        m = np.arange(1, len(lam) + 1)
        if exponent is None:
            half = len(lam) // 2
            exponent = float(np.polyfit(np.log(lam[half:]), np.log(m[half:]), 1)[0])
        c = float(np.max(m / lam ** exponent)) * safety
        return cls(c, float(exponent))

    def count(self, lam) -> np.ndarray:
        return self.constant * np.asarray(lam, dtype=float) ** self.exponent


def _tail_coefficients(tail) -> Optional[GrowthBound]:
    """Accept a GrowthBound or anything with .constant/.exponent (WeylFit)."""
    if tail is None:
        return None
    if isinstance(tail, GrowthBound):
        return tail
    return GrowthBound(float(tail.constant), float(tail.exponent))


@dataclasses.dataclass
class HeatTrace:
    """Partial heat trace with a tail bracket [lower, upper] per time."""

    times: np.ndarray
    values: np.ndarray          # the partial sums Z_m(t)
    lower: np.ndarray
    upper: np.ndarray
    truncation: int
    tail_model: Optional[GrowthBound]

    @property
    def bracket_width(self) -> np.ndarray:
        return self.upper - self.lower

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


def _eigs_of(spec_or_eigs) -> np.ndarray:
    if isinstance(spec_or_eigs, Spectrum):
        return spec_or_eigs.eigenvalues
    return np.asarray(spec_or_eigs, dtype=float)


def heat_trace(spec: Union[Spectrum, Sequence[float]], times, tail=None) -> HeatTrace:
    """Z(t) = sum_j e^{-lam_j t} over the computed modes, with tail bracket.

    ``tail`` is a growth model (GrowthBound, or a WeylFit via duck typing)
    bounding N(lam) beyond the last computed eigenvalue; integrating it
    against e^{-lam t} gives the upper bracket.  Without one, the trace is
    only returned when the truncation is negligible (1e-6 relative at the
    smallest time), else TailModelMissing.
    """
    if isinstance(spec, Spectrum) and not spec.certified_complete:
        raise ValueError("heat_trace needs a completeness-certified spectrum")
    lam = _eigs_of(spec)
    if len(lam) == 0 or np.any(lam <= 0):
        raise ValueError("need a nonempty positive spectrum")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t <= 0):
        raise ValueError("times must be positive")
    z = np.exp(-np.outer(t, lam)).sum(axis=1)
    m = len(lam)
    lam_m = lam[-1]
    model = _tail_coefficients(tail)
    if model is None:
        proxy = m * math.exp(-lam_m * t.min())
        if proxy > 1e-6 * z[t.argmin()]:
            raise TailModelMissing(
                f"truncation proxy {proxy:.2e} exceeds 1e-6 relative at "
                f"t={t.min():g} and no growth model was supplied"
            )
        tail_est = np.full_like(z, proxy)
    else:
        c, s = model.constant, model.exponent
        tail_est = (c * math.gamma(s + 1.0) * gammaincc(s + 1.0, lam_m * t)
                    / t ** s) - m * np.exp(-lam_m * t)
        tail_est = np.maximum(tail_est, 0.0)
    return HeatTrace(t, z, z.copy(), z + tail_est, m, model)


@dataclasses.dataclass
class KernelDiagonal:
    """H(p,p,t) at a mesh node, with truncation-error estimates."""

    node: int
    point: object
    times: np.ndarray
    values: np.ndarray
    truncation_error: np.ndarray
    modes: int


def kernel_diagonal(spec: Spectrum, p, times, rel_budget: float = 1e-4,
                    check_budget: bool = True) -> KernelDiagonal:
    """Diagonal expansion sum e^{-lam t} phi(p)^2 at the node nearest p.

    The omitted modes are bounded through |phi_m(p)| <= c lam_m with c read
    off the computed modes and the fitted eigenvalue growth; if that bound
    exceeds ``rel_budget`` relative at some requested time, TimeTooSmall
    names the smallest admissible time.
    """
    if spec.eigenfunctions is None:
        raise ValueError("kernel_diagonal needs eigenfunctions")
    mesh = spec.operator.mesh
    node = p if isinstance(p, (int, np.integer)) else mesh.nearest_node(p)
    lam = spec.eigenvalues
    phi_p = spec.eigenfunctions[node]
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t <= 0):
        raise ValueError("times must be positive")
    vals = np.exp(-np.outer(t, lam)) @ (phi_p ** 2)

    sup = np.max(np.abs(spec.eigenfunctions), axis=0)
    c_sup = float(np.max(sup / lam))
    growth = GrowthBound.from_eigenvalues(lam, exponent=None)
    cc, s = growth.constant, growth.exponent
    lam_m = lam[-1]
    trunc = (c_sup ** 2 * cc * math.gamma(s + 3.0)
             * gammaincc(s + 3.0, lam_m * t) / t ** (s + 2.0))
    if check_budget:
        bad = trunc > rel_budget * vals
        if np.any(bad):
            ok = t[~bad]
            hint = f"; smallest admissible sampled t is {ok.min():g}" if len(ok) else ""
            raise TimeTooSmall(
                f"kernel truncation bound exceeds {rel_budget:g} relative "
                f"at t={t[bad].min():g} with {len(lam)} modes{hint}"
            )
    return KernelDiagonal(int(node), p, t, vals, trunc, len(lam))


# ---------------------------------------------------------------------------
# paired-expansion checks
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class MonotonicityReport:
    times: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    tolerance: float
    holds: bool
    worst: float


def check_kernel_monotonicity(inner: KernelDiagonal, outer: KernelDiagonal,
                              tol: float = 1e-8) -> MonotonicityReport:
    """Domain monotonicity H^Omega <= H^Omega' at matched points and times."""
    if len(inner.times) != len(outer.times) or np.max(np.abs(inner.times - outer.times)) > 0:
        raise ValueError("kernel diagonals must share their time grids")
    diff = inner.values - outer.values
    worst = float(diff.max())
    return MonotonicityReport(inner.times, inner.values, outer.values,
                              tol, worst <= tol, worst)


@dataclasses.dataclass
class RescalingReport:
    alpha: float
    beta: float
    eigenvalue_rel_err: float
    kernel_rel_err: float
    tolerance: float
    holds: bool


def check_rescaling_identity(op, alpha: float, beta: float, p, t: float,
                             m: int = 12, tol: float = 1e-10) -> RescalingReport:
    """Exactness of the discrete rescaling law.

    Scaling distances by alpha and measure by beta maps the operator to
    (beta/alpha^2 A, beta M); eigenvalues divide by alpha^2 and the diagonal
    kernel obeys H'(p,p,t) = (1/beta) H(p,p,t/alpha^2).  Both are identities
    of the discrete model and must hold to ~rounding.
    """
    from .eigensolve import lowest_eigs

    base = lowest_eigs(op, m)
    scaled = lowest_eigs(op.rescaled(alpha, beta), m)
    eig_err = float(np.max(np.abs(scaled.eigenvalues * alpha ** 2 / base.eigenvalues - 1.0)))
    h_base = kernel_diagonal(base, p, [t / alpha ** 2], check_budget=False).values[0]
    h_scaled = kernel_diagonal(scaled, p, [t], check_budget=False).values[0]
    k_err = abs(h_scaled * beta / h_base - 1.0)
    holds = eig_err <= tol and k_err <= tol
    return RescalingReport(alpha, beta, eig_err, k_err, tol, holds)


# ---------------------------------------------------------------------------
# exponential tail decay on exactly summable hosts
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class TailReport:
    radii: np.ndarray
    outside_mass: np.ndarray
    r0: float
    slope: float
    holds: bool


_LAM_T_CUT = 60.0   # e^{-lam t} below e^-60: mode dropped from exact series


def _interval_modes(L: float, t: float):
    mmax = max(int(math.ceil(L * math.sqrt(_LAM_T_CUT / t) / math.pi)), 8)
    m = np.arange(1, mmax + 1)
    lam = (m * math.pi / L) ** 2
    return m, lam


def _interval_outside_mass(L: float, p: float, t: float, r: float) -> float:
    """int_{(0,L) \\ B_r(p)} H(x,p,t) dx by exact sine series."""
    m, lam = _interval_modes(L, t)
    amp = math.sqrt(2.0 / L)
    phi_p = amp * np.sin(m * math.pi * p / L)
    coeff = np.exp(-lam * t) * phi_p

    def seg(a, b):
        if b <= a:
            return np.zeros_like(lam)
        k = m * math.pi / L
        return amp * (np.cos(k * a) - np.cos(k * b)) / k

    lo, hi = max(p - r, 0.0), min(p + r, L)
    out = seg(0.0, lo) + seg(hi, L)
    return float(np.dot(coeff, out))


def _rect_outside_mass(a: float, b: float, p, t: float, r: float) -> float:
    """Product sine series: total mass minus a polar quadrature over B_r(p)."""
    def axis(L, x0):
        m, lam = _interval_modes(L, t)
        amp = math.sqrt(2.0 / L)
        phi = amp * np.sin(m * math.pi * x0 / L)
        w = np.exp(-lam * t) * phi
        k = m * math.pi / L
        total = float(np.dot(w, amp * (1.0 - np.cos(k * L)) / k))

        def line(xs):
            return (w[None, :] * amp * np.sin(np.outer(xs, k))).sum(axis=1)
        return total, line

    tot_x, kx = axis(a, p[0])
    tot_y, ky = axis(b, p[1])
    ns, na = 48, 256
    gx, gw = np.polynomial.legendre.leggauss(ns)
    s = 0.5 * r * (gx + 1.0)
    ws = 0.5 * r * gw
    ang = 2.0 * math.pi * np.arange(na) / na
    xs = p[0] + np.outer(s, np.cos(ang))
    ys = p[1] + np.outer(s, np.sin(ang))
    hvals = kx(xs.ravel()).reshape(ns, na) * ky(ys.ravel()).reshape(ns, na)
    inside = float((ws * s) @ hvals.sum(axis=1)) * (2.0 * math.pi / na)
    return tot_x * tot_y - inside


def check_tail_decay(space: SpaceSpec, p, t: float, r_grid) -> TailReport:
    """Mass of the heat kernel outside B_R(p) against R (exact series).

    Supported hosts are unit-weight intervals and rectangles, where the
    Dirichlet expansion is exactly summable.  The fitted slope of
    log(mass) vs R must be <= -1 for R >= R_0 = max(5t, sqrt(5Nt/2)).
    DomainTooSmall signals a host too small to contain the largest ball
    with a safe Gaussian margin (5 sqrt(t)).
    """
    if not space.weight.is_unit or space.kind not in ("interval", "rectangle"):
        raise DomainTooSmall(
            "tail decay needs an exactly summable host (unit interval/rectangle)"
        )
    r = np.sort(np.asarray(r_grid, dtype=float))
    if len(r) < 2:
        raise ValueError("need at least two radii")
    q = space.as_point(p)
    margin = space.boundary_distance(q)
    if margin < r[-1] + 5.0 * math.sqrt(t):
        raise DomainTooSmall(
            f"host boundary distance {margin:g} cannot hold B_{r[-1]:g}(p) "
            f"plus the 5*sqrt(t) Gaussian margin"
        )
    if space.kind == "interval":
        mass = np.array([_interval_outside_mass(space.lengths[0], q, t, s) for s in r])
    else:
        mass = np.array([_rect_outside_mass(*space.lengths, q, t, s) for s in r])
    if np.any(mass <= 0.0):
        raise DomainTooSmall("outside mass fell below roundoff; host too small")
    n_dim = space.dim
    r0 = max(5.0 * t, math.sqrt(5.0 * n_dim * t / 2.0))
    use = r >= r0 - 1e-12
    if use.sum() >= 2:
        slope = float(np.polyfit(r[use], np.log(mass[use]), 1)[0])
    else:
        slope = float(np.polyfit(r, np.log(mass), 1)[0])
    holds = slope <= -1.0 and bool(np.all(np.diff(mass) < 0.0))
    return TailReport(r, mass, r0, slope, holds)


# ---------------------------------------------------------------------------
# invariants' helpers
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class GaussianShapeReport:
    times: np.ndarray
    values: np.ndarray        # H(p,p,t) * mu(B_sqrt(t)(p))
    bound: float
    holds: bool


def check_gaussian_shape(diag: KernelDiagonal, space: SpaceSpec, p,
                         bound: float = 1.0) -> GaussianShapeReport:
    """Boundedness of H(p,p,t)*mu(B_sqrt(t)(p)) over the sampled times."""
    mu = np.array([ball_measure(space, p, math.sqrt(tt), clip=True)
                   for tt in diag.times])
    vals = diag.values * mu
    return GaussianShapeReport(diag.times, vals, bound,
                               bool(np.all(vals <= bound)))


def trace_diagonal_consistency(spec: Spectrum, times) -> dict:
    """Discrete int H(x,x,t) dmu versus Z(t).

    The mass-weighted diagonal sum with the *consistent* quadratic form
    sum_j e^{-lam_j t} phi_j^T M phi_j reproduces Z(t) exactly (the phi are
    M-orthonormal); the row-sum (lumped) weighting differs by the mass
    lumping error only.  Both are returned for comparison.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    lam = spec.eigenvalues
    phi = spec.eigenfunctions
    mfull = spec.operator.mass_full
    quad = np.einsum("ij,ij->j", phi, mfull @ phi)      # = 1 exactly
    consistent = np.exp(-np.outer(t, lam)) @ quad
    w = np.asarray(mfull.sum(axis=1)).ravel()
    diag_nodes = np.exp(-np.outer(t, lam)) @ (phi.T ** 2 @ w)
    z = np.exp(-np.outer(t, lam)).sum(axis=1)
    return {"times": t, "trace": z, "consistent": consistent, "lumped": diag_nodes}


def vertex_kernel_series(theta: float, radius: float, times,
                         lam_t_cut: float = 45.0) -> np.ndarray:
    """Exact H(vertex, vertex, t) on the truncated cone by Bessel series.

    Only the angular order-0 modes are nonzero at the vertex:
    H = sum_s e^{-(j_{0,s}/R)^2 t} * 2/(theta R^2 J_1(j_{0,s})^2).
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    z_max = math.sqrt(lam_t_cut / t.min()) * radius
    zeros = bessel_zeros(0.0, max(z_max, 15.0))
    lam = (zeros / radius) ** 2
    weights = 2.0 / (theta * radius ** 2 * jv(1.0, zeros) ** 2)
    return np.exp(-np.outer(t, lam)) @ weights
