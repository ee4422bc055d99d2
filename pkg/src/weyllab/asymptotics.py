"""Weyl-law extraction, small-time limits, and Tauberian consistency.

The three limit families live here as ladder extrapolations producing
LimitEstimate records, next to the prediction ω_k·H^k/(2π)^k, the
empirical fit of N(λ) ≈ Ĉ·λ^{k/2}, and the Karamata round trip tying the
heat-trace constant A to the counting constant A/Γ(k/2+1).
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence, Union

import numpy as np

from .eigensolve import (CountingFunction, Spectrum, counting_from_spectrum,
                         lowest_eigs)
from .errors import UnresolvedLimit, UnsupportedDomain, WindowTooNarrow
from .geometry import density_estimate, unit_ball_volume
from .heat import GrowthBound, HeatTrace, KernelDiagonal, heat_trace
from .meshing import BallDomain, build_mesh
from .numerics import ladder_ratio, richardson
from .spaces import SpaceSpec, WeightSpec

__all__ = [
    "WeylFit",
    "LimitEstimate",
    "weyl_constant_forms",
    "weyl_predict",
    "weyl_fit",
    "trace_limit",
    "diagonal_limit",
    "b_limit",
    "karamata_check",
    "KaramataReport",
    "measure_independence_experiment",
    "MeasureIndependenceReport",
    "time_ladder",
]


@dataclasses.dataclass(frozen=True)
class WeylFit:
    """Empirical asymptotics N(lambda) ~ constant * lambda**exponent."""

    exponent: float
    constant: float
    window: tuple
    residual: float            # RMS of the log-log fit over the window
    method: str                # "loglog-regression" | "plateau-median"
    points: int


@dataclasses.dataclass(frozen=True)
class LimitEstimate:
    """Extrapolated small-parameter limit along a geometric ladder."""

    quantity: str              # "trace-limit" | "diagonal-limit" | "b-limit"
    ladder: np.ndarray         # parameter values (t or r), decreasing
    values: np.ndarray         # quantity sampled on the ladder
    limit: float
    residual: float            # last-two-rung difference after extrapolation
    predicted: Optional[float] = None

    @property
    def rel_error(self) -> float:
        if self.predicted is None:
            raise ValueError("no prediction attached")
        return abs(self.limit - self.predicted) / abs(self.predicted)


# ---------------------------------------------------------------------------
# the Weyl constant: prediction and empirical fit
# ---------------------------------------------------------------------------


def weyl_constant_forms(k: int) -> tuple:
    """(omega_k/(2pi)^k, 1/(Gamma(k/2+1) (4pi)^{k/2})) — equal analytically."""
    a = unit_ball_volume(k) / (2.0 * math.pi) ** k
    b = 1.0 / (math.gamma(k / 2.0 + 1.0) * (4.0 * math.pi) ** (k / 2.0))
    return a, b


def _hausdorff_measure(space: SpaceSpec, domain) -> float:
    """H^k of the counting domain, in closed form (weight ignored)."""
    if domain is None:
        if space.kind == "interval":
            return space.lengths[0]
        if space.kind == "rectangle":
            return space.lengths[0] * space.lengths[1]
        if space.kind in ("disk", "cone"):
            return 0.5 * space.angle * space.lengths[0] ** 2
        raise UnsupportedDomain(f"no closed-form measure for {space.kind}")
    if not isinstance(domain, BallDomain):
        raise UnsupportedDomain("domain must be a BallDomain or None")
    if space.kind == "interval":
        c = space.as_point(domain.center)
        lo = max(c - domain.radius, 0.0)
        hi = min(c + domain.radius, space.lengths[0])
        if hi <= lo:
            raise UnsupportedDomain("ball misses the interval")
        return hi - lo
    if space.kind in ("disk", "cone"):
        q = space.as_point(domain.center)
        if q[0] > 1e-14:
            raise UnsupportedDomain("closed-form area needs a centred ball")
        r = min(domain.radius, space.lengths[0])
        return 0.5 * space.angle * r ** 2
    raise UnsupportedDomain("no closed-form ball area on a rectangle")


def weyl_predict(space: SpaceSpec, domain=None, k: Optional[int] = None) -> float:
    """omega_k * H^k(Omega) / (2 pi)^k for the model space (or a ball in it).

    The equivalent Gamma-function form H^k / (Gamma(k/2+1) (4 pi)^{k/2}) is
    asserted to agree to 1e-12; the weight plays no role.
    """
    kk = space.dim if k is None else int(k)
    hk = _hausdorff_measure(space, domain)
    f1, f2 = weyl_constant_forms(kk)
    assert abs(f1 / f2 - 1.0) <= 1e-12
    return f1 * hk


def weyl_fit(count: CountingFunction, window, fixed_exponent: Optional[float] = None,
             grid_points: int = 60) -> WeylFit:
    """Read the Weyl constant (and exponent) off a counting function.

    With ``fixed_exponent`` the constant is the median of N(lam)/lam**s over
    the window (plateau method); otherwise both parameters come from a
    log-log least-squares fit.  N is a step function, so the natural sample
    set is its jumps: when the counting function carries explicit
    eigenvalues those inside the window are used directly, otherwise a log
    grid of ``grid_points`` is laid down.  The window must stay inside the
    reliable band and hold at least 20 usable points.
    """
    lo, hi = float(window[0]), float(window[1])
    if not 0.0 < lo < hi:
        raise WindowTooNarrow(f"bad window [{lo:g}, {hi:g}]")
    if hi > count.band_limit * (1.0 + 1e-12):
        raise WindowTooNarrow(
            f"window top {hi:g} exceeds the reliable band {count.band_limit:g}"
        )
    if grid_points < 20:
        raise WindowTooNarrow("need at least 20 grid points")
    if count.eigenvalues is not None:
        inside = (count.eigenvalues >= lo) & (count.eigenvalues <= hi)
        lam = np.unique(count.eigenvalues[inside])
    elif count.grid is not None:
        inside = (count.grid >= lo) & (count.grid <= hi)
        lam = count.grid[inside]
    else:
        lam = np.geomspace(lo, hi, grid_points)
    n = np.asarray(count.count(lam), dtype=float) if len(lam) else np.zeros(0)
    good = n > 0
    if good.sum() < 20:
        raise WindowTooNarrow(
            f"only {int(good.sum())} usable sample points in the window"
        )
    lam, n = lam[good], n[good]
    if fixed_exponent is not None:
        s = float(fixed_exponent)
        c = float(np.median(n / lam ** s))
        resid = np.log(n) - (math.log(c) + s * np.log(lam))
        method = "plateau-median"
    else:
        slope, intercept = np.polyfit(np.log(lam), np.log(n), 1)
        s, c = float(slope), float(math.exp(intercept))
        resid = np.log(n) - (intercept + slope * np.log(lam))
        method = "loglog-regression"
    if s <= 0:
        raise WindowTooNarrow(f"fitted exponent {s:g} is not positive")
    return WeylFit(s, c, (lo, hi), float(np.sqrt(np.mean(resid ** 2))),
                   method, len(lam))


# ---------------------------------------------------------------------------
# ladder limits
# ---------------------------------------------------------------------------


def time_ladder(t0: float, rungs: int = 5, ratio: float = 4.0) -> np.ndarray:
    """Geometric time ladder t0, t0/ratio, ..., decreasing."""
    return t0 / ratio ** np.arange(rungs)


def _extrapolate(quantity: str, param: np.ndarray, values: np.ndarray,
                 widths: Optional[np.ndarray], orders, predicted) -> LimitEstimate:
    order_idx = np.argsort(param)[::-1]          # coarse (large) first
    p = param[order_idx]
    v = values[order_idx]
    q = ladder_ratio(p)
    if widths is not None:
        w = widths[order_idx]
        rung = abs(v[-1] - v[-2])
        if np.max(w) > 0.5 * rung and np.max(w) > 1e-13 * max(abs(v[-1]), 1e-300):
            raise UnresolvedLimit(
                f"tail bracket {np.max(w):.2e} dominates the last rung "
                f"difference {rung:.2e}"
            )
    limit, residual, _ = richardson(v, q, orders)
    return LimitEstimate(quantity, p, v, float(limit), float(residual), predicted)


def trace_limit(trace: HeatTrace, k: int, orders=(0.5, 1.0)) -> LimitEstimate:
    """lim t^{k/2} Z(t) by Richardson extrapolation down the time ladder.

    The default orders target the boundary expansion (sqrt(t), then t).
    Raises UnresolvedLimit when the truncation bracket is wider than the
    information left in the ladder.
    """
    vals = trace.times ** (k / 2.0) * trace.midpoint()
    widths = trace.times ** (k / 2.0) * trace.bracket_width
    return _extrapolate("trace-limit", trace.times, vals, widths, orders, None)


def diagonal_limit(diag: KernelDiagonal, k: int, theta_k: float,
                   orders=None) -> LimitEstimate:
    """lim t^{k/2} H(p,p,t) against the predicted 1/(theta_k (4 pi)^{k/2})."""
    predicted = 1.0 / (theta_k * (4.0 * math.pi) ** (k / 2.0))
    vals = diag.times ** (k / 2.0) * diag.values
    widths = diag.times ** (k / 2.0) * diag.truncation_error
    return _extrapolate("diagonal-limit", diag.times, vals, widths, orders, predicted)


def b_limit(profile, k: int, theta_k: Optional[float] = None,
            orders=None) -> LimitEstimate:
    """lim b(p,r)/r^k against theta_k(p) * omega_k / (k+1)."""
    if theta_k is None:
        theta_k = density_estimate(profile.space, profile.center, k=k).value
    predicted = theta_k * unit_ball_volume(k) / (k + 1.0)
    radii = np.asarray(profile.radii, dtype=float)
    vals = np.asarray(profile.b, dtype=float) / radii ** k
    return _extrapolate("b-limit", radii, vals, None, orders, predicted)


# ---------------------------------------------------------------------------
# Karamata consistency and measure independence
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class KaramataReport:
    fitted_constant: float     # Weyl-fit Ĉ
    trace_constant: float      # extrapolated A = lim t^{k/2} Z
    implied_constant: float    # A / Gamma(k/2+1)
    rel_error: float
    tolerance: float
    holds: bool
    window: tuple
    times: np.ndarray


def _as_eigenvalues(count_or_spectrum) -> np.ndarray:
    if isinstance(count_or_spectrum, Spectrum):
        return count_or_spectrum.eigenvalues
    if isinstance(count_or_spectrum, CountingFunction):
        if count_or_spectrum.eigenvalues is None:
            raise ValueError("karamata_check needs explicit eigenvalues")
        return count_or_spectrum.eigenvalues
    return np.asarray(count_or_spectrum, dtype=float)


def karamata_check(count_or_spectrum, k: int, tol: float = 0.05,
                   window=None, times=None) -> KaramataReport:
    """Tauberian round trip on one spectrum.

    Fits Ĉ from the counting function and A from the heat trace of the
    *same* eigenvalue list, then compares Ĉ against A/Gamma(k/2+1).
    """
    lam = _as_eigenvalues(count_or_spectrum)
    if len(lam) < 100:
        raise ValueError("karamata_check needs a long spectrum (>= 100 modes)")
    band = float(lam[-1])
    if window is None:
        hi = 0.8 * band
        window = (0.2 * hi, hi)
    count = CountingFunction("analytic", band, eigenvalues=lam)
    fit = weyl_fit(count, window, fixed_exponent=k / 2.0)

    if times is None:
        t_min = 40.0 / band
        times = time_ladder(t_min * 4.0 ** 4, rungs=5, ratio=4.0)
    growth = GrowthBound.from_eigenvalues(lam, exponent=k / 2.0)
    trace = heat_trace(lam, times, tail=growth)
    a_limit = trace_limit(trace, k)
    implied = a_limit.limit / math.gamma(k / 2.0 + 1.0)
    rel = abs(fit.constant - implied) / abs(implied)
    return KaramataReport(fit.constant, a_limit.limit, implied, rel, tol,
                          rel <= tol, fit.window, np.asarray(times, dtype=float))


@dataclasses.dataclass
class MeasureIndependenceReport:
    labels: list
    constants: list
    rel_errors: list
    predicted: float
    tolerance: float
    holds: bool


def measure_independence_experiment(base: SpaceSpec,
                                    weights: Sequence[WeightSpec],
                                    h: Optional[float] = None,
                                    tol: float = 0.05) -> MeasureIndependenceReport:
    """Weyl constants across reweightings of one space, on one mesh.

    Each weight gets the same mesh; the fitted plateau constant must land on
    the unit-weight prediction regardless of the measure.
    """
    from .assembly import assemble

    if h is None:
        h = base.lengths[0] / 2000.0 if base.kind == "interval" else base.lengths[0] / 60.0
    mesh = build_mesh(base, h)
    predicted = weyl_predict(base)
    k = base.dim
    labels, constants, rels = [], [], []
    for w in weights:
        op = assemble(mesh, weight=w)
        m = op.reliable_band
        spec = lowest_eigs(op, m, want_vectors=False)
        count = counting_from_spectrum(spec)
        lo = spec.eigenvalues[max(m // 4 - 1, 0)]
        fit = weyl_fit(count, (lo, count.band_limit), fixed_exponent=k / 2.0)
        label = w.form if not w.coefficients else f"{w.form}{tuple(w.coefficients)}"
        labels.append(label)
        constants.append(fit.constant)
        rels.append(abs(fit.constant - predicted) / predicted)
    holds = all(r <= tol for r in rels)
    return MeasureIndependenceReport(labels, constants, rels, predicted, tol, holds)
