"""P1 finite-element assembly of the weighted Dirichlet forms.

The bilinear forms are the Dirichlet energy int |grad u|^2 f dH and the
weighted mass int u v f dH.  Interval and rectangle elements are the
standard ones.  Polar meshes are assembled *in the chart*: the energy
integrand splits into u_r v_r * r and u_phi v_phi / r, and both moments
int_T r and int_T 1/r are integrated exactly over each chart triangle
(the latter via the log width formula), so the geometry carries no
discretization error -- only the field approximation and the one-point
weight rule do.

Hub cells around the chart origin use the degenerate three-node element
(1 - r/a, (r/a)(1-u), (r/a)u); its local matrices are exact integrals as
well and keep the operator conforming with the first annulus ring.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np
from scipy import sparse

from .errors import SingularElement
from .meshing import Mesh
from .spaces import WeightSpec

__all__ = ["DiscreteOperator", "assemble"]

# exact integrals of lambda_a lambda_b lambda_k over a triangle, per unit area
_C3 = np.full((3, 3, 3), 1.0 / 60.0)
for _i in range(3):
    _C3[_i, _i, _i] = 1.0 / 10.0
    for _j in range(3):
        if _i != _j:
            _C3[_i, _i, _j] = _C3[_i, _j, _i] = _C3[_j, _i, _i] = 1.0 / 30.0

# hub-cell templates (radius a, angular width d): A = f*(d*K1 + K2/d), M = f*a^2*d*K3
_HUB_K1 = np.array([[1 / 2, -1 / 4, -1 / 4],
                    [-1 / 4, 1 / 6, 1 / 12],
                    [-1 / 4, 1 / 12, 1 / 6]])
_HUB_K2 = np.array([[0.0, 0.0, 0.0],
                    [0.0, 1 / 2, -1 / 2],
                    [0.0, -1 / 2, 1 / 2]])
_HUB_K3 = np.array([[1 / 12, 1 / 24, 1 / 24],
                    [1 / 24, 1 / 12, 1 / 24],
                    [1 / 24, 1 / 24, 1 / 12]])


@dataclasses.dataclass
class DiscreteOperator:
    """Assembled stiffness/mass pair restricted to the free nodes."""

    mesh: Mesh
    weight: WeightSpec
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    free_nodes: np.ndarray
    mass_full: sparse.csr_matrix
    scale: tuple = (1.0, 1.0)     # (alpha, beta) bookkeeping for rescalings

    @property
    def n_free(self) -> int:
        return len(self.free_nodes)

    @property
    def reliable_band(self) -> int:
        """How many low modes the mesh can be trusted for (free/10 rule)."""
        return max(self.n_free // 10, 1)

    def full_vector(self, v: np.ndarray) -> np.ndarray:
        """Scatter a free-node vector to all mesh nodes (zeros on boundary)."""
        out = np.zeros((self.mesh.n_nodes,) + v.shape[1:])
        out[self.free_nodes] = v
        return out

    def rescaled(self, alpha: float, beta: float) -> "DiscreteOperator":
        """The operator of the (alpha, beta)-rescaled space on the same mesh.

        Metric scaling by alpha and measure scaling by beta turn the forms
        into A' = (beta/alpha^2) A and M' = beta M exactly, entry by entry.
        """
        if alpha <= 0 or beta <= 0:
            raise ValueError("scale factors must be positive")
        return DiscreteOperator(
            self.mesh, self.weight,
            (beta / alpha ** 2) * self.stiffness, beta * self.mass,
            self.free_nodes, beta * self.mass_full,
            (self.scale[0] * alpha, self.scale[1] * beta),
        )


def _weight_values(mesh: Mesh, weight: WeightSpec, bary: np.ndarray) -> np.ndarray:
    if mesh.kind == "interval":
        f = weight(bary)
    elif mesh.space.kind == "disk":
        f = weight(bary[:, 0] * np.cos(bary[:, 1]), bary[:, 0] * np.sin(bary[:, 1]))
    else:
        f = weight(bary[:, 0], bary[:, 1])
    f = np.asarray(f, dtype=float)
    if np.any(~np.isfinite(f)) or np.any(f <= 0.0):
        bad = int(np.argmin(f))
        raise SingularElement(
            f"weight is not positive at element {bad} barycenter"
        )
    return f


def _interval_blocks(mesh: Mesh, weight: WeightSpec):
    x = mesh.nodes
    el = mesh.elements
    hs = x[el[:, 1]] - x[el[:, 0]]
    if np.any(hs <= 0):
        raise SingularElement("non-positive interval element")
    fb = _weight_values(mesh, weight, 0.5 * (x[el[:, 0]] + x[el[:, 1]]))
    ka = fb / hs
    km = fb * hs / 6.0
    a_loc = np.empty((len(el), 2, 2))
    a_loc[:, 0, 0] = a_loc[:, 1, 1] = ka
    a_loc[:, 0, 1] = a_loc[:, 1, 0] = -ka
    m_loc = np.empty_like(a_loc)
    m_loc[:, 0, 0] = m_loc[:, 1, 1] = 2.0 * km
    m_loc[:, 0, 1] = m_loc[:, 1, 0] = km
    return el, a_loc, m_loc


def _plane_blocks(mesh: Mesh, weight: WeightSpec):
    el = mesh.elements
    p = mesh.nodes[el]                                   # (ne, 3, 2)
    fb = _weight_values(mesh, weight, p.mean(axis=1))
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    two_t = x[:, 0] * b[:, 0] + x[:, 1] * b[:, 1] + x[:, 2] * b[:, 2]
    area = 0.5 * np.abs(two_t)
    if np.any(area <= 0):
        raise SingularElement("degenerate plane triangle")
    a_loc = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :])
    a_loc *= (fb / (4.0 * area))[:, None, None]
    m_tpl = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    m_loc = (fb * area)[:, None, None] * m_tpl
    return el, a_loc, m_loc


def _inv_r_moment(rv: np.ndarray, pv: np.ndarray) -> np.ndarray:
    """Exact int_T (1/r) dr dphi per chart triangle (radially sorted input).

    The triangle's angular width as a function of r is piecewise linear,
    zero at the extreme radii with peak W at the middle one; each linear
    piece integrates in closed form against 1/r.
    """
    ra, rb, rc = rv[:, 0], rv[:, 1], rv[:, 2]
    pa, pb, pc = pv[:, 0], pv[:, 1], pv[:, 2]
    span = rc - ra
    if np.any(ra <= 0.0):
        raise SingularElement("chart triangle touches r=0 outside a hub cell")
    t = np.where(span > 0, (rb - ra) / np.where(span > 0, span, 1.0), 0.0)
    width = np.abs(pb - (pa + (pc - pa) * t))
    d1, d2 = rb - ra, rc - rb
    eps = 1e-13 * rc
    safe1 = np.where(d1 > eps, d1, 1.0)
    safe2 = np.where(d2 > eps, d2, 1.0)
    rise = np.where(d1 > eps, width * (1.0 - ra * np.log(rb / ra) / safe1), 0.0)
    fall = np.where(d2 > eps, width * (rc * np.log(rc / rb) / safe2 - 1.0), 0.0)
    return rise + fall


def _polar_blocks(mesh: Mesh, weight: WeightSpec):
    nh = mesh.hub_count
    theta = mesh.space.angle
    el_h = mesh.elements[:nh]
    el_t = mesh.elements[nh:]

    blocks = []
    # hub fan: radius a = first ring, width dphi, f at the cell weight point
    a = mesh.nodes[el_h[0, 1], 0]
    dphi = theta / nh
    mid = mesh.nodes[el_h[:, 1], 1] + dphi / 2.0
    fb_h = _weight_values(mesh, weight,
                          np.column_stack([np.full(nh, 2.0 * a / 3.0), mid]))
    a_h = fb_h[:, None, None] * (dphi * _HUB_K1 + _HUB_K2 / dphi)
    m_h = (fb_h * a * a * dphi)[:, None, None] * _HUB_K3
    blocks.append((el_h, a_h, m_h))

    if len(el_t):
        rp = mesh.nodes[el_t]                            # (ne, 3, 2)
        rv = rp[..., 0]
        pv = rp[..., 1].copy()
        # unwrap phi across the periodic seam relative to the first vertex
        ref = pv[:, :1]
        pv = ref + ((pv - ref + theta / 2.0) % theta) - theta / 2.0
        bary = np.column_stack([rv.mean(axis=1), (pv.mean(axis=1)) % theta])
        fb = _weight_values(mesh, weight, bary)

        b = np.stack([pv[:, 1] - pv[:, 2], pv[:, 2] - pv[:, 0], pv[:, 0] - pv[:, 1]], axis=1)
        c = np.stack([rv[:, 2] - rv[:, 1], rv[:, 0] - rv[:, 2], rv[:, 1] - rv[:, 0]], axis=1)
        two_t = rv[:, 0] * b[:, 0] + rv[:, 1] * b[:, 1] + rv[:, 2] * b[:, 2]
        area = 0.5 * np.abs(two_t)
        if np.any(area <= 0):
            raise SingularElement("degenerate chart triangle")
        i_r = area * rv.mean(axis=1)

        order = np.argsort(rv, axis=1)
        i_inv = _inv_r_moment(np.take_along_axis(rv, order, axis=1),
                              np.take_along_axis(pv, order, axis=1))

        gr = b / two_t[:, None]      # d(lambda_i)/dr
        gp = c / two_t[:, None]      # d(lambda_i)/dphi
        a_t = (gr[:, :, None] * gr[:, None, :]) * i_r[:, None, None] \
            + (gp[:, :, None] * gp[:, None, :]) * i_inv[:, None, None]
        a_t *= fb[:, None, None]
        m_t = np.einsum("ek,abk->eab", rv, _C3) * area[:, None, None]
        m_t *= fb[:, None, None]
        blocks.append((el_t, a_t, m_t))
    return blocks


def assemble(mesh: Mesh, weight: Optional[WeightSpec] = None) -> DiscreteOperator:
    """Assemble the weighted stiffness/mass pair on a mesh.

    The weight defaults to the space's own; passing one overrides it (used
    by the measure-independence experiments, which sweep densities over a
    fixed mesh).
    """
    if weight is None:
        weight = mesh.space.weight
    if mesh.kind == "interval":
        blocks = [_interval_blocks(mesh, weight)]
    elif mesh.kind == "plane":
        blocks = [_plane_blocks(mesh, weight)]
    else:
        blocks = _polar_blocks(mesh, weight)

    n = mesh.n_nodes
    rows, cols, a_data, m_data = [], [], [], []
    for el, a_loc, m_loc in blocks:
        k = el.shape[1]
        r = np.repeat(el, k, axis=1).ravel()
        co = np.tile(el, (1, k)).ravel()
        rows.append(r)
        cols.append(co)
        a_data.append(a_loc.ravel())
        m_data.append(m_loc.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    a_full = sparse.coo_matrix((np.concatenate(a_data), (rows, cols)), shape=(n, n)).tocsr()
    m_full = sparse.coo_matrix((np.concatenate(m_data), (rows, cols)), shape=(n, n)).tocsr()

    free = np.flatnonzero(~mesh.boundary_mask)
    a_free = a_full[free][:, free].tocsr()
    m_free = m_full[free][:, free].tocsr()
    a_free.sort_indices()
    m_free.sort_indices()
    return DiscreteOperator(mesh, weight, a_free, m_free, free, m_full)
