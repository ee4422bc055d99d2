"""Meshes for the model spaces.

Intervals get uniform segments; rectangles a structured triangulation;
disks and cones a polar-chart triangulation made of a fan of degenerate
"hub" cells around the centre plus annulus cells, all assembled in chart
coordinates.  Chart element measures are exact integrals of r dr dphi, so
the element measures of every mesh sum to the geometric measure of its
domain to rounding accuracy (this is asserted at build time).

Node numbering keeps the stiffness bandwidth small: row-major for the
rectangle, ring-major (hub node first) for polar meshes.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .errors import ResolutionTooCoarse, SingularElement, UnsupportedDomain
from .spaces import SpaceSpec

__all__ = ["BallDomain", "Mesh", "build_mesh", "refine", "export_mesh_table"]

_MEASURE_RTOL = 1e-6  # agreement demanded between mesh and domain measure


@dataclasses.dataclass(frozen=True)
class BallDomain:
    """Solve on B_radius(center) intersected with the space.

    Interval balls may stick out of the space; the protruding end is then
    cut at the space boundary and left *unconstrained* (no sphere point
    there).  Two-dimensional balls must be centred at the disk centre or
    cone vertex.
    """

    center: object
    radius: float


@dataclasses.dataclass
class Mesh:
    space: SpaceSpec
    kind: str                    # "interval" | "plane" | "polar"
    nodes: np.ndarray            # (n,) or (n, 2); chart coords for polar
    elements: np.ndarray         # (ne, 2) or (ne, 3)
    element_measure: np.ndarray  # geometric measure of each element
    boundary_mask: np.ndarray    # True where Dirichlet-constrained
    h: float                     # max physical element diameter
    hub_count: int = 0           # leading elements that are polar hub cells
    params: dict = dataclasses.field(default_factory=dict)
    domain: Optional[BallDomain] = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def free_count(self) -> int:
        return int((~self.boundary_mask).sum())

    def physical_nodes(self) -> np.ndarray:
        """Node coordinates in the space's own convention (disk: cartesian)."""
        if self.space.kind == "disk" and self.kind == "polar":
            r, ph = self.nodes[:, 0], self.nodes[:, 1]
            return np.column_stack([r * np.cos(ph), r * np.sin(ph)])
        return self.nodes

    def nearest_node(self, point) -> int:
        """Index of the mesh node closest to a point of the space."""
        if self.kind == "interval":
            x = self.space.as_point(point)
            return int(np.argmin(np.abs(self.nodes - x)))
        p = self.space.as_point(point)
        if self.kind == "polar":
            if self.space.kind == "cone":
                dist = np.array([self.space.distance(p, q) for q in self.nodes])
            else:
                r, ph = self.nodes[:, 0], self.nodes[:, 1]
                dist = np.hypot(r * np.cos(ph) - p[0], r * np.sin(ph) - p[1])
            return int(np.argmin(dist))
        return int(np.argmin(np.hypot(self.nodes[:, 0] - p[0], self.nodes[:, 1] - p[1])))


def _check_measure(mesh: Mesh, target: float):
    total = float(mesh.element_measure.sum())
    if not math.isclose(total, target, rel_tol=_MEASURE_RTOL):
        raise SingularElement(
            f"mesh measure {total!r} disagrees with domain measure {target!r}"
        )


def _interval_mesh(space: SpaceSpec, h: float, domain: Optional[BallDomain], n: Optional[int]):
    L = space.lengths[0]
    lo, hi = 0.0, L
    left_sphere = right_sphere = True
    if domain is not None:
        c = space.as_point(domain.center)
        lo, hi = c - domain.radius, c + domain.radius
        tol = 1e-12 * max(L, 1.0)
        left_sphere = lo >= -tol     # ball boundary point inside the space
        right_sphere = hi <= L + tol
        lo, hi = max(lo, 0.0), min(hi, L)
        if hi <= lo:
            raise UnsupportedDomain("ball does not meet the interval")
    if n is None:
        n = int(math.ceil((hi - lo) / h))
    if n < 2:
        raise ResolutionTooCoarse(f"h={h:g} leaves no interior node on ({lo:g}, {hi:g})")
    nodes = np.linspace(lo, hi, n + 1)
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    measures = np.diff(nodes)
    boundary = np.zeros(n + 1, dtype=bool)
    boundary[0] = left_sphere
    boundary[-1] = right_sphere
    mesh = Mesh(space, "interval", nodes, elements, measures, boundary,
                float(measures.max()), 0,
                {"n": n, "lo": lo, "hi": hi,
                 "left_sphere": left_sphere, "right_sphere": right_sphere},
                domain)
    _check_measure(mesh, hi - lo)
    return mesh


def _plane_mesh(space: SpaceSpec, h: float, nx: Optional[int], ny: Optional[int]):
    a, b = space.lengths
    if nx is None:
        nx = int(math.ceil(a / h))
        ny = int(math.ceil(b / h))
    if nx < 2 or ny < 2:
        raise ResolutionTooCoarse(f"h={h:g} leaves no interior node on the rectangle")
    xs = np.linspace(0.0, a, nx + 1)
    ys = np.linspace(0.0, b, ny + 1)
    X, Y = np.meshgrid(xs, ys)                      # Y slow, X fast: row-major
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (nx + 1) + i

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00, v10 = idx(i, j), idx(i + 1, j)
    v01, v11 = idx(i, j + 1), idx(i + 1, j + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    elements = np.vstack([lower, upper])
    area = 0.5 * (a / nx) * (b / ny)
    measures = np.full(len(elements), area)
    boundary = np.zeros(len(nodes), dtype=bool)
    gx, gy = nodes[:, 0], nodes[:, 1]
    eps = 1e-12 * max(a, b)
    boundary |= (gx < eps) | (gx > a - eps) | (gy < eps) | (gy > b - eps)
    mesh = Mesh(space, "plane", nodes, elements, measures, boundary,
                math.hypot(a / nx, b / ny), 0, {"nx": nx, "ny": ny}, None)
    _check_measure(mesh, a * b)
    return mesh


def _polar_mesh(space: SpaceSpec, h: float, domain: Optional[BallDomain],
                nr: Optional[int], nphi: Optional[int]):
    R = space.lengths[0]
    theta = space.angle
    if domain is not None:
        c = space.as_point(domain.center)
        at_centre = (c[0] == 0.0) if space.kind == "cone" else (math.hypot(*c) == 0.0)
        if not at_centre:
            raise UnsupportedDomain(
                "two-dimensional ball domains must be centred at the vertex/centre"
            )
        if domain.radius > R * (1 + 1e-12):
            raise UnsupportedDomain("ball radius exceeds the space radius")
        R = min(domain.radius, R)
    if nr is None:
        nr = int(math.ceil(R / h))
        nphi = int(math.ceil(theta * R / h))
    nr = max(nr, 2)
    nphi = max(nphi, 8)
    if nr < 2:
        raise ResolutionTooCoarse("need at least two rings")
    dr, dphi = R / nr, theta / nphi
    if dphi >= math.pi / 2:
        nphi = int(math.ceil(theta / (math.pi / 2 - 1e-9)))
        dphi = theta / nphi

    rs = dr * np.arange(1, nr + 1)
    phis = dphi * np.arange(nphi)
    n_nodes = 1 + nr * nphi
    nodes = np.zeros((n_nodes, 2))
    ring_r = np.repeat(rs, nphi)
    ring_phi = np.tile(phis, nr)
    nodes[1:, 0] = ring_r
    nodes[1:, 1] = ring_phi

    def node(i, j):  # ring i >= 1, angular slot j (mod nphi)
        return 1 + (i - 1) * nphi + (j % nphi)

    j = np.arange(nphi)
    hub = np.column_stack([np.zeros(nphi, dtype=int), node(1, j), node(1, j + 1)])
    tris = [hub]
    meas = [np.full(nphi, 0.5 * dr * dr * dphi)]
    for i in range(1, nr):
        a_ = node(i, j)
        b_ = node(i, j + 1)
        c_ = node(i + 1, j + 1)
        d_ = node(i + 1, j)
        r_lo, r_hi = rs[i - 1], rs[i]
        tris.append(np.column_stack([a_, d_, c_]))
        meas.append(np.full(nphi, dr * dphi * (r_lo + 2 * r_hi) / 6.0))
        tris.append(np.column_stack([a_, c_, b_]))
        meas.append(np.full(nphi, dr * dphi * (2 * r_lo + r_hi) / 6.0))
    elements = np.vstack(tris)
    measures = np.concatenate(meas)
    boundary = np.zeros(n_nodes, dtype=bool)
    boundary[node(nr, j)] = True
    h_actual = max(math.hypot(dr, R * dphi), 2.0 * dr * math.sin(min(dphi / 2, math.pi / 2)))
    mesh = Mesh(space, "polar", nodes, elements, measures, boundary, h_actual,
                nphi, {"nr": nr, "nphi": nphi, "R": R}, domain)
    _check_measure(mesh, 0.5 * theta * R * R)
    return mesh


def build_mesh(space: SpaceSpec, h: float, domain: Optional[BallDomain] = None,
               counts: Optional[tuple] = None) -> Mesh:
    """Mesh the space (or a ball subdomain) at target resolution h.

    ``counts`` overrides the element counts derived from h: (n,) for an
    interval, (nx, ny) for a rectangle, (nr, nphi) for a polar mesh.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if space.kind == "interval":
        return _interval_mesh(space, h, domain, *(counts or (None,)))
    if space.kind == "rectangle":
        if domain is not None:
            raise UnsupportedDomain("ball domains on rectangles are not meshable here")
        return _plane_mesh(space, h, *(counts or (None, None)))
    return _polar_mesh(space, h, domain, *(counts or (None, None)))


def refine(mesh: Mesh) -> Mesh:
    """Uniformly refine: every element count doubles, h roughly halves."""
    p = mesh.params
    if mesh.kind == "interval":
        return _interval_mesh(mesh.space, mesh.h / 2, mesh.domain, 2 * p["n"])
    if mesh.kind == "plane":
        return _plane_mesh(mesh.space, mesh.h / 2, 2 * p["nx"], 2 * p["ny"])
    return _polar_mesh(mesh.space, mesh.h / 2, mesh.domain, 2 * p["nr"], 2 * p["nphi"])


def export_mesh_table(mesh: Mesh, path):
    """Write the mesh as a plain-text table.

    Lines are ``NODE id x1 [x2] constrained`` followed by
    ``ELEMENT id n1 n2 [n3] measure``; the header documents the space,
    element kind and column order.
    """
    with open(path, "w") as fh:
        fh.write(f"# space: {mesh.space.describe()}\n")
        fh.write(f"# mesh kind: {mesh.kind}; h={mesh.h:.9g}; "
                 f"hub cells: {mesh.hub_count}\n")
        if mesh.kind == "interval":
            fh.write("# NODE id x constrained\n")
            fh.write("# ELEMENT id n1 n2 measure\n")
            for i, x in enumerate(mesh.nodes):
                fh.write(f"NODE {i} {x:.17g} {int(mesh.boundary_mask[i])}\n")
        else:
            label = "r phi" if mesh.kind == "polar" else "x y"
            fh.write(f"# NODE id {label} constrained\n")
            fh.write("# ELEMENT id n1 n2 n3 measure\n")
            for i, q in enumerate(mesh.nodes):
                fh.write(f"NODE {i} {q[0]:.17g} {q[1]:.17g} {int(mesh.boundary_mask[i])}\n")
        for e, (conn, m) in enumerate(zip(mesh.elements, mesh.element_measure)):
            ns = " ".join(str(int(v)) for v in conn)
            fh.write(f"ELEMENT {e} {ns} {m:.17g}\n")
