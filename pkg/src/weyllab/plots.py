"""Figures for the experiment runner.

Everything here is decorative: assertions live on the CSV/JSON side and
never read a figure.  SVGs are written with a fixed hash salt and no date
stamp so repeated runs of one config produce identical bytes.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

matplotlib.rcParams.update({
    "svg.hashsalt": "weyllab",
    "figure.figsize": (5.6, 3.6),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})

_SAVE = {"format": "svg", "metadata": {"Date": None}, "bbox_inches": "tight"}


def _finish(fig, path):
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def counting_plot(path, lam, counts, constant, exponent, label=""):
    """N(lambda) staircase against the predicted Weyl curve."""
    fig, ax = plt.subplots()
    ax.step(lam, counts, where="post", lw=1.0, label="N(lambda)")
    smooth = np.linspace(min(lam), max(lam), 400)
    ax.plot(smooth, constant * smooth ** exponent, "k--", lw=1.0,
            label=f"{constant:.5g} lambda^{exponent:g}")
    ax.set_xlabel("lambda")
    ax.set_ylabel("count")
    ax.set_title(label or "counting function")
    ax.legend(loc="upper left")
    return _finish(fig, path)


def trace_plot(path, times, scaled, predicted, k, label=""):
    """t^{k/2} Z(t) against its predicted limit."""
    fig, ax = plt.subplots()
    ax.semilogx(times, scaled, "o-", ms=4, lw=1.0,
                label=f"t^{k / 2:g} Z(t)")
    if predicted is not None:
        ax.axhline(predicted, color="k", ls="--", lw=1.0,
                   label=f"predicted {predicted:.5g}")
    ax.set_xlabel("t")
    ax.set_ylabel("scaled trace")
    ax.set_title(label or "heat-trace limit")
    ax.legend(loc="best")
    return _finish(fig, path)


def ladder_plot(path, scales, values, predicted, limit, label=""):
    """Blow-up kernel ladder with the extrapolated and predicted limits."""
    fig, ax = plt.subplots()
    ax.semilogx(scales, values, "o-", ms=4, lw=1.0, label="ladder")
    ax.axhline(limit, color="C1", ls=":", lw=1.0,
               label=f"extrapolated {limit:.5g}")
    if predicted is not None:
        ax.axhline(predicted, color="k", ls="--", lw=1.0,
                   label=f"predicted {predicted:.5g}")
    ax.set_xlabel("scale r")
    ax.set_ylabel("H(p,p,r^2 t) b(p,r)")
    ax.set_title(label or "blow-up ladder")
    ax.legend(loc="best")
    return _finish(fig, path)


def convergence_plot(path, params, rel_errors, tol, label=""):
    """Worst relative spectral deviation across a family, log-log."""
    fig, ax = plt.subplots()
    safe = np.maximum(np.asarray(rel_errors, dtype=float), 1e-300)
    ax.loglog(params, safe, "o-", ms=4, lw=1.0, label="worst rel. error")
    ax.axhline(tol, color="k", ls="--", lw=1.0, label=f"tolerance {tol:g}")
    ax.set_xlabel("family parameter")
    ax.set_ylabel("max_i |lambda_i / lambda_i^inf - 1|")
    ax.set_title(label or "local spectral convergence")
    ax.legend(loc="best")
    return _finish(fig, path)


def geometry_plot(path, radii, ratios, label=""):
    """Bishop-Gromov normalized volume ratios against the radius."""
    fig, ax = plt.subplots()
    ax.semilogx(radii, ratios, "o-", ms=4, lw=1.0)
    ax.set_xlabel("r")
    ax.set_ylabel("mu(B_r) / v_model(r)")
    ax.set_title(label or "Bishop-Gromov ratio")
    return _finish(fig, path)


def spectrum_plot(path, tables, label=""):
    """Eigenvalue tables (index vs value), one line per resolution."""
    fig, ax = plt.subplots()
    for name, eigs in tables.items():
        ax.plot(np.arange(1, len(eigs) + 1), eigs, "o-", ms=3, lw=0.8,
                label=str(name))
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.set_title(label or "spectrum")
    ax.legend(loc="upper left")
    return _finish(fig, path)


def report_plot(path, names, rel_errors, tolerances, passed):
    """Summary chart: one bar per assertion, rel. error vs its bar."""
    fig, ax = plt.subplots(figsize=(6.4, 0.42 * max(len(names), 4) + 1.2))
    y = np.arange(len(names))
    rel = np.asarray([r if r is not None else 0.0 for r in rel_errors])
    colors = ["C2" if ok else "C3" for ok in passed]
    ax.barh(y, np.maximum(rel, 1e-18), color=colors, height=0.6, log=True)
    for i, tol in enumerate(tolerances):
        if tol:
            ax.plot([tol, tol], [i - 0.35, i + 0.35], "k--", lw=1.0)
    ax.set_yticks(y)
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlabel("relative error (dashes: tolerance)")
    ax.set_title("assertion summary")
    return _finish(fig, path)
