"""Model metric measure spaces.

Four families, each carried with a smooth positive weight against its
natural geometric measure:

* ``interval``  -- (0, L) with weight f(x) dx
* ``rectangle`` -- (0, a) x (0, b) with f dx dy
* ``disk``      -- flat disk of radius R (cartesian coordinates)
* ``cone``      -- flat cone of total angle theta, truncated at radius R,
                   in polar chart coordinates (r, phi), phi taken mod theta

Distances are intrinsic (the cone uses the unfolded chord through the
smaller angular gap), measures are weighted, and balls may optionally be
clipped to the space; unclipped requests that leave the domain raise
:class:`~weyllab.errors.RadiusOutOfDomain`.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import RadiusOutOfDomain, UnsupportedSpace

__all__ = [
    "WeightSpec",
    "SpaceSpec",
    "interval",
    "rectangle",
    "disk",
    "cone",
    "ball_measure",
    "b_function",
]

# Gauss-Legendre rule reused for radial sections of weighted balls.
_GAUSS_N = 24
_GX, _GW = np.polynomial.legendre.leggauss(_GAUSS_N)

_QUAD_OPTS = dict(epsabs=1e-11, epsrel=1e-11, limit=400)


def _gauss(fn, lo, hi):
    """Fixed-order Gauss integral of a vectorized callable on [lo, hi]."""
    if hi <= lo:
        return 0.0
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return half * float(np.dot(_GW, fn(mid + half * _GX)))


@dataclasses.dataclass(frozen=True)
class WeightSpec:
    """Smooth positive density against the geometric measure.

    ``form`` selects the family:

    * ``unit``        -- constant 1, no coefficients
    * ``affine``      -- c0 + c1*x1 (+ c2*x2 in two dimensions)
    * ``sinusoidal``  -- c0 + c1*sin(c2*x1)
    * ``custom``      -- arbitrary vectorized callable of the coordinates

    Two-dimensional spaces feed cartesian coordinates for rectangles and
    disks and chart coordinates (r, phi) for cones.
    """

    form: str = "unit"
    coefficients: tuple = ()
    function: Optional[Callable] = None

    def __post_init__(self):
        if self.form not in ("unit", "affine", "sinusoidal", "custom"):
            raise UnsupportedSpace(f"unknown weight form {self.form!r}")
        if self.form == "custom" and self.function is None:
            raise UnsupportedSpace("custom weight needs a callable")
        if self.form == "sinusoidal" and len(self.coefficients) != 3:
            raise UnsupportedSpace("sinusoidal weight needs (c0, c1, omega)")

    @property
    def is_unit(self) -> bool:
        return self.form == "unit"

    def __call__(self, x1, x2=None):
        x1 = np.asarray(x1, dtype=float)
        if self.form == "unit":
            return np.ones_like(x1)
        if self.form == "affine":
            c = self.coefficients
            out = c[0] + c[1] * x1
            if len(c) > 2 and x2 is not None:
                out = out + c[2] * np.asarray(x2, dtype=float)
            return out
        if self.form == "sinusoidal":
            c0, c1, om = self.coefficients
            return c0 + c1 * np.sin(om * x1)
        if x2 is None:
            return np.asarray(self.function(x1), dtype=float)
        return np.asarray(self.function(x1, x2), dtype=float)


def _wrap_angle(phi: float, theta: float) -> float:
    return phi % theta


def _angular_gap(phi1: float, phi2: float, theta: float) -> float:
    """Smaller angular separation on a circle of circumference theta."""
    d = abs(phi1 - phi2) % theta
    return min(d, theta - d)


@dataclasses.dataclass(frozen=True)
class SpaceSpec:
    """A weighted model space (see module docstring for the families)."""

    kind: str
    lengths: tuple
    cone_angle: Optional[float] = None
    weight: WeightSpec = WeightSpec()
    curvature: float = 0.0
    dimension_bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle", "disk", "cone"):
            raise UnsupportedSpace(f"unknown space kind {self.kind!r}")
        if any(ln <= 0 for ln in self.lengths):
            raise UnsupportedSpace("lengths must be positive")
        if self.kind == "interval" and len(self.lengths) != 1:
            raise UnsupportedSpace("interval takes a single length")
        if self.kind == "rectangle" and len(self.lengths) != 2:
            raise UnsupportedSpace("rectangle takes two side lengths")
        if self.kind in ("disk", "cone") and len(self.lengths) != 1:
            raise UnsupportedSpace("disk/cone take a single radius")
        if self.kind == "cone":
            if self.cone_angle is None:
                raise UnsupportedSpace("cone needs a total angle")
            if not 0.0 < self.cone_angle <= 2.0 * math.pi:
                raise UnsupportedSpace("cone angle must lie in (0, 2*pi]")
        elif self.cone_angle is not None:
            raise UnsupportedSpace("cone_angle only makes sense for cones")

    # -- basic descriptors -------------------------------------------------

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def effective_dimension(self) -> float:
        """Dimension parameter N used in comparison bounds (defaults to dim)."""
        return self.dim if self.dimension_bound is None else self.dimension_bound

    @property
    def angle(self) -> float:
        """Full opening angle at the centre (2*pi unless a proper cone)."""
        if self.kind == "cone":
            return self.cone_angle
        if self.kind == "interval":
            raise UnsupportedSpace("angle undefined on an interval")
        return 2.0 * math.pi

    def describe(self) -> str:
        bits = [self.kind] + [f"{ln:g}" for ln in self.lengths]
        if self.kind == "cone":
            bits.append(f"angle={self.cone_angle:g}")
        if not self.weight.is_unit:
            bits.append(f"weight={self.weight.form}")
        return " ".join(bits)

    # -- points ------------------------------------------------------------

    def as_point(self, p):
        """Normalize a point: float for intervals, length-2 array otherwise."""
        if self.kind == "interval":
            return float(np.asarray(p).reshape(()))
        q = np.asarray(p, dtype=float).reshape(2).copy()
        if self.kind == "cone":
            q[1] = _wrap_angle(q[1], self.cone_angle)
        return q

    def contains(self, p, slack: float = 1e-12) -> bool:
        scale = max(self.lengths)
        tol = slack * scale
        if self.kind == "interval":
            x = self.as_point(p)
            return -tol <= x <= self.lengths[0] + tol
        q = self.as_point(p)
        if self.kind == "rectangle":
            a, b = self.lengths
            return -tol <= q[0] <= a + tol and -tol <= q[1] <= b + tol
        if self.kind == "disk":
            return math.hypot(q[0], q[1]) <= self.lengths[0] + tol
        return -tol <= q[0] <= self.lengths[0] + tol

    def distance(self, p, q) -> float:
        if self.kind == "interval":
            return abs(self.as_point(p) - self.as_point(q))
        u, v = self.as_point(p), self.as_point(q)
        if self.kind in ("rectangle", "disk"):
            return math.hypot(u[0] - v[0], u[1] - v[1])
        gap = _angular_gap(u[1], v[1], self.cone_angle)
        return math.sqrt(
            max(u[0] ** 2 + v[0] ** 2 - 2.0 * u[0] * v[0] * math.cos(gap), 0.0)
        )

    def boundary_distance(self, p) -> float:
        """Distance from an interior point to the Dirichlet boundary."""
        if self.kind == "interval":
            x = self.as_point(p)
            return min(x, self.lengths[0] - x)
        q = self.as_point(p)
        if self.kind == "rectangle":
            a, b = self.lengths
            return min(q[0], a - q[0], q[1], b - q[1])
        if self.kind == "disk":
            return self.lengths[0] - math.hypot(q[0], q[1])
        return self.lengths[0] - q[0]

    def injectivity_radius(self, p) -> float:
        """Largest s with B_s(p) isometric to a flat ball (boundary aside).

        Finite only on a cone away from the vertex; elsewhere the boundary
        is the only obstruction and the boundary distance is returned.
        """
        if self.kind != "cone":
            return self.boundary_distance(p)
        q = self.as_point(p)
        rho = q[0]
        wrap = 1.0 if self.cone_angle >= math.pi else math.sin(0.5 * self.cone_angle)
        return min(self.boundary_distance(p), rho * wrap)

    # -- measures ----------------------------------------------------------

    def geometric_measure(self) -> float:
        """Unweighted Hausdorff measure of the whole space."""
        if self.kind == "interval":
            return self.lengths[0]
        if self.kind == "rectangle":
            return self.lengths[0] * self.lengths[1]
        if self.kind == "disk":
            return math.pi * self.lengths[0] ** 2
        return 0.5 * self.cone_angle * self.lengths[0] ** 2

    def measure(self) -> float:
        """Weighted measure of the whole space."""
        w = self.weight
        if w.is_unit:
            return self.geometric_measure()
        if self.kind == "interval":
            val, _ = integrate.quad(lambda x: float(w(x)), 0.0, self.lengths[0], **_QUAD_OPTS)
            return val
        if self.kind == "rectangle":
            a, b = self.lengths

            def row(y):
                return _gauss(lambda x: w(x, np.full_like(x, y)), 0.0, a)

            val, _ = integrate.quad(row, 0.0, b, **_QUAD_OPTS)
            return val
        # disk / cone via the polar chart
        radius = self.lengths[0]
        theta = self.angle
        if self.kind == "disk":
            def ray(phi):
                c, s = math.cos(phi), math.sin(phi)
                return _gauss(lambda r: w(r * c, r * s) * r, 0.0, radius)
        else:
            def ray(phi):
                return _gauss(lambda r: w(r, np.full_like(r, phi)) * r, 0.0, radius)
        val, _ = integrate.quad(ray, 0.0, theta, **_QUAD_OPTS)
        return val

    def weight_at(self, p) -> float:
        if self.kind == "interval":
            return float(self.weight(self.as_point(p)))
        q = self.as_point(p)
        return float(self.weight(q[0], q[1]))


def interval(length: float, weight: WeightSpec = WeightSpec(), **kw) -> SpaceSpec:
    return SpaceSpec("interval", (float(length),), weight=weight, **kw)


def rectangle(a: float, b: float, weight: WeightSpec = WeightSpec(), **kw) -> SpaceSpec:
    return SpaceSpec("rectangle", (float(a), float(b)), weight=weight, **kw)


def disk(radius: float, weight: WeightSpec = WeightSpec(), **kw) -> SpaceSpec:
    return SpaceSpec("disk", (float(radius),), weight=weight, **kw)


def cone(radius: float, angle: float, weight: WeightSpec = WeightSpec(), **kw) -> SpaceSpec:
    return SpaceSpec(
        "cone", (float(radius),), cone_angle=float(angle), weight=weight, **kw
    )


# ---------------------------------------------------------------------------
# ball measures
# ---------------------------------------------------------------------------


def _interval_ball(space: SpaceSpec, x: float, r: float, clip: bool) -> float:
    lo, hi = x - r, x + r
    if clip:
        lo, hi = max(lo, 0.0), min(hi, space.lengths[0])
    if hi <= lo:
        return 0.0
    if space.weight.is_unit:
        return hi - lo
    val, _ = integrate.quad(lambda t: float(space.weight(t)), lo, hi, **_QUAD_OPTS)
    return val


def _section(space: SpaceSpec, p, phi: float, lo: float, hi: float) -> float:
    """Weighted integral of f along the radial section s in (lo, hi)."""
    if hi <= lo:
        return 0.0
    w = space.weight
    if w.is_unit:
        return 0.5 * (hi * hi - lo * lo)
    if space.kind == "cone":
        ang = _wrap_angle(phi, space.cone_angle)
        return _gauss(lambda s: w(s, np.full_like(s, ang)) * s, lo, hi)
    c, snt = math.cos(phi), math.sin(phi)
    return _gauss(lambda s: w(p[0] + s * c, p[1] + s * snt) * s, lo, hi)


def _planar_exit(space: SpaceSpec, p, phi: float) -> float:
    """Distance from p to the boundary along direction phi (rectangle/disk)."""
    if space.kind == "disk":
        R = space.lengths[0]
        pu = p[0] * math.cos(phi) + p[1] * math.sin(phi)
        return -pu + math.sqrt(max(R * R - (p[0] ** 2 + p[1] ** 2) + pu * pu, 0.0))
    a, b = space.lengths
    c, s = math.cos(phi), math.sin(phi)
    out = math.inf
    if c > 1e-15:
        out = min(out, (a - p[0]) / c)
    elif c < -1e-15:
        out = min(out, -p[0] / c)
    if s > 1e-15:
        out = min(out, (b - p[1]) / s)
    elif s < -1e-15:
        out = min(out, -p[1] / s)
    return max(out, 0.0)


def _planar_ball(space: SpaceSpec, p, r: float, clip: bool) -> float:
    kinks = []
    if clip:
        if space.kind == "disk":
            R = space.lengths[0]
            rho = math.hypot(p[0], p[1])
            if rho > 1e-14:
                carg = (R * R - rho * rho - r * r) / (2.0 * r * rho)
                if abs(carg) < 1.0:
                    gamma = math.acos(carg)
                    base = math.atan2(p[1], p[0])
                    kinks += [base - gamma, base + gamma]
        else:
            a, b = space.lengths
            for cx in (0.0, a):
                for cy in (0.0, b):
                    kinks.append(math.atan2(cy - p[1], cx - p[0]))
    pts = sorted({k % (2.0 * math.pi) for k in kinks})

    def width(phi):
        hi = r
        if clip:
            hi = min(hi, _planar_exit(space, p, phi))
        return _section(space, p, phi, 0.0, hi)

    val, _ = integrate.quad(width, 0.0, 2.0 * math.pi, points=pts or None, **_QUAD_OPTS)
    return val


def _cone_ball(space: SpaceSpec, p, r: float, clip: bool) -> float:
    theta = space.cone_angle
    R = space.lengths[0]
    rho, phi0 = p[0], p[1]
    kinks = []
    if rho > r > 0.0:
        kinks.append(math.asin(min(r / rho, 1.0)))
    if clip and rho > 1e-14:
        carg = (rho * rho + R * R - r * r) / (2.0 * rho * R)
        if abs(carg) < 1.0:
            kinks.append(math.acos(carg))
    half = 0.5 * theta
    offsets = sorted({k for k in kinks if 0.0 < k < half})
    lo_int, hi_int = phi0 - half, phi0 + half
    pts = []
    for k in offsets:
        pts += [phi0 - k, phi0 + k]
    pts = sorted(t for t in pts if lo_int < t < hi_int)

    def width(phi):
        gap = _angular_gap(phi, phi0, theta)
        disc = r * r - (rho * math.sin(gap)) ** 2
        if disc <= 0.0:
            return 0.0
        root = math.sqrt(disc)
        mid = rho * math.cos(gap)
        lo, hi = max(mid - root, 0.0), mid + root
        if clip:
            hi = min(hi, R)
        return _section(space, p, phi, lo, hi)

    val, _ = integrate.quad(width, lo_int, hi_int, points=pts or None, **_QUAD_OPTS)
    return val


def ball_measure(space: SpaceSpec, center, radius: float, clip: bool = False) -> float:
    """Weighted measure of the metric ball B_radius(center).

    With ``clip=False`` the ball must stay inside the space; otherwise
    :class:`RadiusOutOfDomain` is raised.  With ``clip=True`` the ball is
    intersected with the space (this is the measure of the metric ball of
    the compact space itself).
    """
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    if radius == 0.0:
        return 0.0
    p = space.as_point(center)
    if not space.contains(p):
        raise RadiusOutOfDomain(f"center {center!r} lies outside the space")
    if not clip:
        slack = 1e-12 * max(max(space.lengths), 1.0)
        if radius > space.boundary_distance(p) + slack:
            raise RadiusOutOfDomain(
                f"ball of radius {radius:g} leaves the domain "
                f"(boundary distance {space.boundary_distance(p):g}); "
                "pass clip=True for the clipped measure"
            )
    if space.kind == "interval":
        return _interval_ball(space, p, radius, clip)
    if space.kind == "cone":
        return _cone_ball(space, p, radius, clip)
    return _planar_ball(space, p, radius, clip)


def b_function(space: SpaceSpec, center, radius: float, clip: bool = False) -> float:
    """Integral of (1 - d(x, center)/radius) over the ball, by layer cake.

    Equals (1/radius) * int_0^radius mu(B_s(center)) ds, which is how it is
    evaluated; the radial integrand is piecewise smooth with kinks only
    where the growing ball first meets the vertex or the boundary.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    p = space.as_point(center)
    breaks = {0.0, radius}
    if space.kind == "cone" and p[0] > 0.0:
        breaks.add(p[0])
        wrap = space.injectivity_radius(p)
        if wrap > 0.0:
            breaks.add(wrap)
    if clip:
        breaks.add(space.boundary_distance(p))
        if space.kind == "interval":
            x = p
            breaks.update((x, space.lengths[0] - x))
    pieces = sorted(s for s in breaks if 0.0 <= s <= radius)
    total = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        total += _gauss(
            np.vectorize(lambda s: ball_measure(space, p, float(s), clip=clip)), lo, hi
        )
    return total / radius
