"""Comparison geometry on the model spaces.

Curvature-k model coefficients, ball-volume profiles, pointwise density
estimates, and the classical volume inequalities (Bishop-Gromov
monotonicity, measure doubling, uniform noncollapsing) evaluated as
checks with explicit reports.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import NonconvergentDensity, RadiusOutOfDomain
from .numerics import richardson
from .spaces import SpaceSpec, b_function, ball_measure

__all__ = [
    "s_k",
    "sk_volume_coefficient",
    "sigma_kt",
    "unit_ball_volume",
    "VolumeProfile",
    "volume_profile",
    "DensityEstimate",
    "density_estimate",
    "ComparisonReport",
    "check_bishop_gromov",
    "check_doubling",
    "check_noncollapsing",
]


def s_k(k: float, tau):
    """Model coefficient: sin(sqrt(k) t)/sqrt(k), t, or sinh(sqrt(-k) t)/sqrt(-k).

    Vectorized in ``tau``; evaluated through sinc-type expressions so small
    |k| and small arguments are exact to rounding.
    """
    t = np.asarray(tau, dtype=float)
    if k > 0.0:
        rk = math.sqrt(k)
        out = t * np.sinc(rk * t / math.pi)
    elif k < 0.0:
        rk = math.sqrt(-k)
        with np.errstate(over="raise"):
            out = np.sinh(rk * t) / rk
    else:
        out = t.copy()
    return out if out.shape else float(out)


def sk_volume_coefficient(k: float, n: float, rho: float) -> float:
    """Integral of s_{k}(tau)**(n-1) over (0, rho).

    ``n`` is the dimension parameter; by convention n = 1 integrates the
    empty product, giving rho.  Closed forms for n in {1, 2}, quadrature
    otherwise.
    """
    if rho < 0.0:
        raise ValueError("rho must be nonnegative")
    if n == 1:
        return rho
    if n == 2:
        if k > 0.0:
            return (1.0 - math.cos(math.sqrt(k) * rho)) / k
        if k < 0.0:
            return (math.cosh(math.sqrt(-k) * rho) - 1.0) / (-k)
        return 0.5 * rho * rho
    val, _ = integrate.quad(lambda t: s_k(k, t) ** (n - 1.0), 0.0, rho,
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def sigma_kt(k: float, t: float, theta: float) -> float:
    """Distortion coefficient sigma_k^(t)(theta).

    Returns sin(sqrt(k) t theta)/sin(sqrt(k) theta) for 0 < k theta^2 < pi^2,
    t when k theta^2 = 0, the sinh analogue for k theta^2 < 0, and the
    distinguished value +inf once k theta^2 >= pi^2.
    """
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    x = k * theta * theta
    if x >= math.pi ** 2:
        return math.inf
    if x == 0.0:
        return t
    rk = math.sqrt(abs(k))
    if k > 0.0:
        return math.sin(rk * t * theta) / math.sin(rk * theta)
    return math.sinh(rk * t * theta) / math.sinh(rk * theta)


# ---------------------------------------------------------------------------
# profiles and densities
# ---------------------------------------------------------------------------


def unit_ball_volume(k: float) -> float:
    """Volume of the unit ball in R^k (Gamma form, valid for real k >= 0)."""
    return math.pi ** (0.5 * k) / math.gamma(0.5 * k + 1.0)


@dataclasses.dataclass
class VolumeProfile:
    """Sampled growth of a point's ball measures and their b-averages."""

    space: SpaceSpec
    center: object
    radii: np.ndarray
    mu: np.ndarray
    b: np.ndarray
    clipped: bool = False

    def normalized(self, k: float):
        """(mu / (omega_k r^k), b / r^k) along the sampled ladder."""
        om = unit_ball_volume(k)
        return self.mu / (om * self.radii ** k), self.b / self.radii ** k


def volume_profile(space: SpaceSpec, center, radii, clip: bool = False) -> VolumeProfile:
    """Sample mu(B_r) and b(center, r) on an increasing ladder of radii.

    Without clipping every radius must stay within the boundary distance
    of the center (RadiusOutOfDomain otherwise).
    """
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or len(r) == 0 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("radii must be a strictly increasing positive ladder")
    p = space.as_point(center)
    if not clip and r[-1] > space.boundary_distance(p) * (1.0 + 1e-12):
        raise RadiusOutOfDomain(
            f"largest radius {r[-1]:g} exceeds boundary distance "
            f"{space.boundary_distance(p):g}"
        )
    mu = np.array([ball_measure(space, p, s, clip=clip) for s in r])
    b = np.array([b_function(space, p, s, clip=clip) for s in r])
    return VolumeProfile(space, p, r, mu, b, clipped=clip)


@dataclasses.dataclass
class DensityEstimate:
    """theta_k(p): limit of mu(B_r(p)) / (omega_k r^k)."""

    value: float
    k: float
    point: object
    method: str                       # "closed-form" or "ladder"
    residual: float = 0.0
    radii: Optional[np.ndarray] = None
    ladder: Optional[np.ndarray] = None


def _is_cone_vertex(space: SpaceSpec, p) -> bool:
    return space.kind == "cone" and float(np.asarray(p).reshape(2)[0]) == 0.0


def density_estimate(
    space: SpaceSpec,
    center,
    k: Optional[float] = None,
    method: str = "auto",
    radii=None,
    rel_tol: float = 1e-3,
) -> DensityEstimate:
    """Estimate the k-density of the weighted measure at an interior point.

    For the built-in smooth weight families with k matching the dimension
    the limit is known in closed form: the weight value times the angle
    fraction (cone vertices contribute angle/(2*pi), every other point 1).
    Otherwise a geometric radius ladder is extrapolated; a residual above
    ``rel_tol`` relative to the value raises NonconvergentDensity.
    """
    if k is None:
        k = float(space.dim)
    p = space.as_point(center)
    inr = space.boundary_distance(p)
    if inr <= 0.0:
        raise RadiusOutOfDomain("density is defined at interior points only")

    closed_ok = (
        method in ("auto", "closed-form")
        and space.weight.form != "custom"
        and k == space.dim
    )
    if method == "closed-form" and not closed_ok:
        raise NonconvergentDensity("no closed form for this weight/k combination")
    if closed_ok:
        frac = 1.0
        if _is_cone_vertex(space, p):
            frac = space.cone_angle / (2.0 * math.pi)
        return DensityEstimate(space.weight_at(p) * frac, k, p, "closed-form")

    if radii is None:
        r0 = 0.9 * min(inr, space.injectivity_radius(p) or inr)
        if r0 <= 0.0:
            r0 = 0.9 * inr
        radii = r0 * 0.5 ** np.arange(6)[::-1]
    r = np.asarray(radii, dtype=float)
    om = unit_ball_volume(k)
    vals = np.array([ball_measure(space, p, s) for s in r]) / (om * r ** k)
    limit, resid, _ = richardson(vals[::-1], ratio=r[1] / r[0] if len(r) > 1 else 2.0)
    # ladder is finest-last after the flip above
    scale = max(abs(limit), abs(vals[0]) * 1e-9, 1e-300)
    if not math.isfinite(limit) or resid > rel_tol * scale:
        raise NonconvergentDensity(
            f"ladder residual {resid:.3e} exceeds {rel_tol:.1e} * {scale:.3e}"
        )
    return DensityEstimate(limit, k, p, "ladder", resid, r, vals)


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class ComparisonReport:
    """Outcome of a volume-comparison check."""

    name: str
    holds: bool
    tolerance: float
    worst: float              # largest violation margin (<= 0 means slack)
    quantities: dict
    branch: str = ""

    def summary(self) -> str:
        state = "holds" if self.holds else "FAILS"
        return f"{self.name}: {state} (worst margin {self.worst:.3e}, tol {self.tolerance:g})"


def check_bishop_gromov(
    space: SpaceSpec,
    center,
    radii,
    curvature: Optional[float] = None,
    n: Optional[float] = None,
    tol: float = 1e-9,
) -> ComparisonReport:
    """Monotonicity of mu(B_rho) / int_0^rho s_{K/(N-1)}(t)^{N-1} dt.

    Balls are metric balls of the compact space (clipped), so the check is
    meaningful up to its diameter.  The N = 1 branch integrates the empty
    product: the denominator is rho itself.
    """
    K = space.curvature if curvature is None else curvature
    N = space.effective_dimension if n is None else n
    r = np.asarray(radii, dtype=float)
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly increasing and positive")
    p = space.as_point(center)
    keff = 0.0 if N == 1 else K / (N - 1.0)
    mu = np.array([ball_measure(space, p, s, clip=True) for s in r])
    denom = np.array([sk_volume_coefficient(keff, N, s) for s in r])
    ratios = mu / denom
    diffs = np.diff(ratios)
    worst = float(np.max(diffs / np.maximum(ratios[:-1], 1e-300))) if len(diffs) else -math.inf
    holds = worst <= tol
    branch = f"K={K:g}, N={N:g}" + (", n=1 empty-product" if N == 1 else "")
    return ComparisonReport(
        "bishop-gromov", holds, tol, worst,
        {"radii": r, "mu": mu, "model": denom, "ratios": ratios},
        branch,
    )


def check_doubling(
    space: SpaceSpec,
    center,
    r: float,
    big_r: float,
    curvature: Optional[float] = None,
    n: Optional[float] = None,
    tol: float = 1e-12,
) -> ComparisonReport:
    """mu(B_R) / mu(B_r) against (R/r)^N exp(sqrt((N-1)|K ^ 0|) R)."""
    if not 0.0 < r <= big_r:
        raise ValueError("need 0 < r <= R")
    K = space.curvature if curvature is None else curvature
    N = space.effective_dimension if n is None else n
    p = space.as_point(center)
    num = ball_measure(space, p, big_r, clip=True)
    den = ball_measure(space, p, r, clip=True)
    measured = num / den
    bound = (big_r / r) ** N * math.exp(math.sqrt((N - 1.0) * abs(min(K, 0.0))) * big_r)
    worst = measured - bound * (1.0 + tol)
    return ComparisonReport(
        "doubling", worst <= 0.0, tol, worst,
        {"r": r, "R": big_r, "measured": measured, "bound": bound},
        f"K={K:g}, N={N:g}",
    )


def _sample_points(space: SpaceSpec, n_points: int, seed: int):
    rng = np.random.default_rng(seed)
    pts = []
    if space.kind == "interval":
        L = space.lengths[0]
        pts = list(np.linspace(0.0, L, n_points))
        pts += list(rng.uniform(0.0, L, size=max(n_points // 2, 2)))
        return pts
    if space.kind == "rectangle":
        a, b = space.lengths
        m = max(int(math.sqrt(n_points)), 2)
        for x in np.linspace(0.0, a, m):
            for y in np.linspace(0.0, b, m):
                pts.append((x, y))
        extra = rng.uniform((0, 0), (a, b), size=(max(n_points // 2, 2), 2))
        return pts + [tuple(q) for q in extra]
    R = space.lengths[0]
    th = space.angle
    m = max(int(math.sqrt(n_points)), 2)
    pts.append((0.0, 0.0))
    for rr in np.linspace(R / m, R, m):
        for ph in np.linspace(0.0, th, m, endpoint=False):
            pts.append((rr, ph))
    extra = rng.uniform((0, 0), (R, th), size=(max(n_points // 2, 2), 2))
    pts += [tuple(q) for q in extra]
    if space.kind == "disk":
        pts = [(rr * math.cos(ph), rr * math.sin(ph)) for rr, ph in pts]
    return pts


def check_noncollapsing(
    space: SpaceSpec,
    n_points: int = 16,
    radii=None,
    seed: int = 0,
) -> ComparisonReport:
    """Uniform lower bound mu(B_r(x)) >= c r^N over sampled points and radii.

    Samples a deterministic grid plus seeded extras, computes the smallest
    normalized ratio mu(B_r)/r^N over all (x, r), and reports it together
    with the minimizer.  Balls are clipped (metric balls of the space).
    """
    N = space.effective_dimension
    diam = _diameter(space)
    if radii is None:
        radii = diam * 0.5 ** np.arange(7)
    radii = np.asarray(radii, dtype=float)
    pts = _sample_points(space, n_points, seed)
    c_min, argmin = math.inf, None
    for p in pts:
        for r in radii:
            ratio = ball_measure(space, p, float(r), clip=True) / r ** N
            if ratio < c_min:
                c_min, argmin = ratio, (p, float(r))
    holds = math.isfinite(c_min) and c_min > 0.0
    return ComparisonReport(
        "noncollapsing", holds, 0.0, -c_min,
        {"c_min": c_min, "minimizer": argmin, "n_points": len(pts),
         "radii": radii, "diameter": diam},
        f"N={N:g}",
    )


def _diameter(space: SpaceSpec) -> float:
    if space.kind == "interval":
        return space.lengths[0]
    if space.kind == "rectangle":
        return math.hypot(*space.lengths)
    if space.kind == "disk":
        return 2.0 * space.lengths[0]
    # cone: the largest rim-rim chord has angular gap theta/2 (<= pi), and the
    # vertex-rim distance R takes over on narrow cones
    R, th = space.lengths[0], space.cone_angle
    return max(R, 2.0 * R * math.sin(0.25 * th))
