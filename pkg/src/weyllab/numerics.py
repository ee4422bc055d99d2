"""Small numerical helpers: geometric-ladder extrapolation."""
from __future__ import annotations

import math

import numpy as np

__all__ = ["richardson", "ladder_ratio"]


def ladder_ratio(points: np.ndarray) -> float:
    """Common ratio of a geometric ladder t_i = t_0 * q**(-i), q > 1.

    Raises ValueError when the points are not (numerically) geometric.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or len(pts) < 2:
        raise ValueError("need at least two ladder points")
    q = pts[:-1] / pts[1:]
    if np.any(pts <= 0) or np.max(np.abs(q / q[0] - 1.0)) > 1e-8 or q[0] <= 1.0:
        raise ValueError("ladder points must decrease geometrically")
    return float(q[0])


def richardson(values, ratio: float, orders=None):
    """Extrapolate a geometric ladder to its limit.

    ``values[i]`` is the quantity at step h_i with h_i / h_{i+1} = ratio.
    ``orders`` lists the leading error exponents to eliminate in turn
    (error ~ c1*h**p1 + c2*h**p2 + ...).  When omitted, a single stage is
    run with the exponent estimated from the last three entries.

    Returns ``(limit, residual, orders_used)`` where the residual is the
    magnitude of the final stage's last correction -- an (optimistic)
    error proxy for the returned limit.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) < 2:
        raise ValueError("need at least two ladder values")
    if ratio <= 1.0:
        raise ValueError("ratio must exceed 1")

    if orders is None:
        if len(v) >= 3:
            d = np.diff(v)
            # a flat ladder (either diff zero, e.g. data already converged
            # to roundoff) carries no slope information: fall back to p = 1
            if d[-1] != 0 and d[-2] != 0:
                p = math.log(abs(d[-2] / d[-1])) / math.log(ratio)
            else:
                p = 1.0
            p = min(max(p, 0.25), 8.0)
        else:
            p = 1.0
        orders = (p,)

    used = []
    for p in orders:
        if len(v) < 2:
            break
        c = ratio ** p
        v = (c * v[1:] - v[:-1]) / (c - 1.0)
        used.append(float(p))

    limit = float(v[-1])
    residual = float(abs(v[-1] - v[-2])) if len(v) >= 2 else float("nan")
    return limit, residual, tuple(used)
