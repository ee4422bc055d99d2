"""Generalized eigenvalue extraction, Sylvester counting, and oracles.

Small pencils (A, M) are solved densely; larger ones by shift-invert
Lanczos with a fixed deterministic start vector.  Either way the lowest-m
claim is certified by an independent inertia count of A - lambda* M at a
gap midpoint: by Sylvester's law the number of negative pivots equals the
number of pencil eigenvalues below lambda*, so agreement proves no mode
was missed.

The same inertia count powers eigenvector-free counting functions N(lambda)
on grids, and analytic Dirichlet spectra of the unit-weight model spaces
(sine lattices and Bessel zeros) provide the exact references.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np
from scipy import linalg as sla
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, splu
from scipy.special import jv

from .assembly import DiscreteOperator
from .errors import FactorizationBreakdown, NoConvergence, UnsupportedSpace
from .spaces import SpaceSpec

__all__ = [
    "Spectrum",
    "lowest_eigs",
    "inertia_count",
    "CountingFunction",
    "counting_from_spectrum",
    "counting_by_inertia",
    "analytic_spectrum",
    "bessel_zeros",
]

_DENSE_LIMIT = 2000
_V0_SEED = 2718281828


@dataclasses.dataclass
class Spectrum:
    """Lowest Dirichlet modes of an assembled operator."""

    operator: DiscreteOperator
    eigenvalues: np.ndarray
    eigenfunctions: Optional[np.ndarray]   # (n_nodes, m), M-orthonormal, sign-fixed
    residuals: np.ndarray                  # ||A v - lam M v||_{M^-1} / (1 + lam)
    method: str                            # "dense" | "shift-invert"
    certified_complete: bool
    tolerance: float

    @property
    def m(self) -> int:
        return len(self.eigenvalues)

    @property
    def reliable_band(self) -> int:
        return self.operator.reliable_band

    def count(self, lam) -> np.ndarray:
        """N(lam) = #{eigenvalues <= lam} within the computed modes."""
        return np.searchsorted(self.eigenvalues, np.asarray(lam, dtype=float),
                               side="right")


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0.0] = 1.0
    return vecs * signs


def lowest_eigs(op: DiscreteOperator, m: int, tol: float = 1e-7,
                want_vectors: bool = True) -> Spectrum:
    """Lowest m Dirichlet eigenpairs, residual-checked and count-certified."""
    n = op.n_free
    if not 1 <= m <= n:
        raise ValueError(f"m={m} out of range for {n} free nodes")
    a, mm = op.stiffness, op.mass

    use_dense = n <= _DENSE_LIMIT or m + 8 >= n
    if use_dense:
        k = min(m + 1, n)
        w, v = sla.eigh(a.toarray(), mm.toarray(), subset_by_index=[0, k - 1])
        method = "dense"
    else:
        k = min(m + 8, n - 1)
        rng = np.random.default_rng(_V0_SEED)
        v0 = rng.standard_normal(n)
        try:
            w, v = eigsh(a, k=k, M=mm, sigma=0.0, which="LM", v0=v0)
        except ArpackNoConvergence as exc:
            raise NoConvergence(
                f"ARPACK converged {len(exc.eigenvalues)}/{k} modes",
                partial=(exc.eigenvalues, exc.eigenvectors),
            ) from exc
        method = "shift-invert"
    order = np.argsort(w)
    w, v = w[order], v[:, order]

    certified = True
    if m < n:
        certified = False
        scale = max(abs(w[m - 1]), 1.0)
        for j in range(m - 1, len(w) - 1):
            if w[j + 1] - w[j] > 1e-9 * scale:
                mid = 0.5 * (w[j] + w[j + 1])
                certified = inertia_count(op, mid) == j + 1
                break
        else:
            if method == "dense":
                # dense subset extraction is complete by construction
                certified = True
    w, v = w[:m], v[:, :m]

    # M-normalize (defensive; both solvers already do) and fix signs
    msolve = splu(mm.tocsc())
    norms = np.sqrt(np.einsum("ij,ij->j", v, mm @ v))
    v = v / norms
    resid = a @ v - mm @ v * w
    res = np.sqrt(np.abs(np.einsum("ij,ij->j", resid, msolve.solve(resid))))
    res = res / (1.0 + np.abs(w))
    if np.any(res > tol):
        raise NoConvergence(
            f"worst residual {res.max():.3e} exceeds tol {tol:.1e}",
            partial=(w, v),
        )
    v = _fix_signs(v)
    full = op.full_vector(v) if want_vectors else None
    return Spectrum(op, w, full, res, method, certified, tol)


# ---------------------------------------------------------------------------
# Sylvester inertia counting
# ---------------------------------------------------------------------------


def inertia_count(op: DiscreteOperator, lam: float) -> int:
    """Number of pencil eigenvalues strictly below lam.

    Factorizes A - lam M by diagonal-pivot sparse LU (no row exchanges, so
    the U diagonal carries the LDL^T pivots) and counts negative pivots.
    A pivot collision -- exact singularity or a forced row swap -- nudges
    lam by one part in 1e8 and retries before giving up.
    """
    n = op.n_free
    shift = float(lam)
    ident = np.arange(n)
    for _ in range(4):
        c = (op.stiffness - shift * op.mass).tocsc()
        try:
            lu = splu(c, permc_spec="NATURAL", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
        except RuntimeError:
            shift = shift * (1.0 + 1e-8) + 1e-300
            continue
        d = lu.U.diagonal()
        swapped = not np.array_equal(lu.perm_r, ident)
        tiny = np.max(np.abs(d)) * 1e-13
        if swapped or np.any(np.abs(d) <= tiny):
            shift = shift * (1.0 + 1e-8) + 1e-300
            continue
        return int(np.count_nonzero(d < 0.0))
    raise FactorizationBreakdown(
        f"inertia of A - {lam:g} M kept hitting zero pivots after perturbation"
    )


# ---------------------------------------------------------------------------
# counting functions
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class CountingFunction:
    """Evaluable eigenvalue-counting function N(lambda) with provenance."""

    source: str                     # "spectrum" | "inertia" | "analytic"
    band_limit: float               # largest lambda the values are trusted at
    eigenvalues: Optional[np.ndarray] = None
    grid: Optional[np.ndarray] = None
    counts: Optional[np.ndarray] = None

    def count(self, lam):
        lamv = np.asarray(lam, dtype=float)
        if self.eigenvalues is not None:
            out = np.searchsorted(self.eigenvalues, lamv, side="right")
        else:
            idx = np.searchsorted(self.grid, lamv * (1 + 1e-12), side="right") - 1
            if np.any(idx < 0):
                raise ValueError("lambda below the sampled counting grid")
            out = self.counts[idx]
        return out if np.ndim(lam) else int(out)


def counting_from_spectrum(spec: Spectrum) -> CountingFunction:
    eigs = spec.eigenvalues
    band = min(spec.m, spec.reliable_band)
    return CountingFunction("spectrum", float(eigs[band - 1]), eigenvalues=eigs)


def counting_by_inertia(op: DiscreteOperator, grid) -> CountingFunction:
    """Eigenvector-free N(lambda) on a grid via repeated inertia counts."""
    g = np.asarray(grid, dtype=float)
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    counts = np.array([inertia_count(op, x) for x in g])
    if np.any(np.diff(counts) < 0):
        raise FactorizationBreakdown("inertia counts came out non-monotone")
    trusted = counts <= op.reliable_band
    band = float(g[trusted][-1]) if np.any(trusted) else float(g[0])
    return CountingFunction("inertia", band, grid=g, counts=counts)


# ---------------------------------------------------------------------------
# analytic oracles
# ---------------------------------------------------------------------------


def bessel_zeros(nu: float, z_max: float) -> np.ndarray:
    """All positive zeros of J_nu below z_max (scan + vectorized bisection)."""
    if z_max <= nu:    # zeros satisfy j_{nu,1} > nu
        return np.zeros(0)
    lo = max(nu, 1e-9)
    grid = np.arange(lo, z_max + 0.5, 0.5)
    vals = jv(nu, grid)
    sign = np.sign(vals)
    sign[sign == 0.0] = 1.0
    idx = np.flatnonzero(sign[:-1] * sign[1:] < 0.0)
    a_, b_ = grid[idx].copy(), grid[idx + 1].copy()
    for _ in range(64):
        mid = 0.5 * (a_ + b_)
        fm = jv(nu, mid)
        left = np.sign(fm) * np.sign(jv(nu, a_)) <= 0.0
        b_ = np.where(left, mid, b_)
        a_ = np.where(left, a_, mid)
    zeros = 0.5 * (a_ + b_)
    return zeros[zeros <= z_max]


def analytic_spectrum(space: SpaceSpec, lam_max: float) -> CountingFunction:
    """Exact Dirichlet spectrum (with multiplicity) up to lam_max.

    Available for the unit-weight model spaces only: sine modes on the
    interval, the two-index sine lattice on the rectangle, and Bessel-zero
    spectra on disks and cones (angular orders 2*pi*k/theta, each k >= 1
    twice for the two rotation senses).
    """
    if not space.weight.is_unit:
        raise UnsupportedSpace("analytic spectra require the unit weight")
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    if space.kind == "interval":
        L = space.lengths[0]
        mmax = int(math.floor(L * math.sqrt(lam_max) / math.pi))
        eigs = (np.arange(1, mmax + 1) * math.pi / L) ** 2
    elif space.kind == "rectangle":
        a, b = space.lengths
        mmax = int(math.floor(a * math.sqrt(lam_max) / math.pi))
        ms = np.arange(1, mmax + 1)
        lam_m = (ms * math.pi / a) ** 2
        eigs = []
        for lm in lam_m:
            rest = lam_max - lm
            if rest <= 0:
                break
            nmax = int(math.floor(b * math.sqrt(rest) / math.pi))
            ns = np.arange(1, nmax + 1)
            eigs.append(lm + (ns * math.pi / b) ** 2)
        eigs = np.concatenate(eigs) if eigs else np.zeros(0)
    elif space.kind in ("disk", "cone"):
        R = space.lengths[0]
        theta = space.angle
        z_max = R * math.sqrt(lam_max)
        chunks = []
        k = 0
        while True:
            nu = 2.0 * math.pi * k / theta
            if nu >= z_max:
                break
            zs = bessel_zeros(nu, z_max)
            if len(zs) == 0 and k > 0:
                break
            lam = (zs / R) ** 2
            chunks.append(lam if k == 0 else np.repeat(lam, 2))
            k += 1
        eigs = np.concatenate(chunks) if chunks else np.zeros(0)
    else:  # pragma: no cover
        raise UnsupportedSpace(space.kind)
    eigs = np.sort(eigs[eigs <= lam_max])
    return CountingFunction("analytic", float(lam_max), eigenvalues=eigs)
