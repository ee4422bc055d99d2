"""Experiment pipeline: a validated config in, a run directory out.

Each run writes its artifacts into ``<out>/<digest>/``: CSV tables with a
fixed ``%.17g`` float format (so identical config+seed reproduces identical
bytes), a ``manifest.json`` naming every produced file with per-stage
timings and a pass/fail record per assertion, and optional SVG figures.
The manifest is written even when a stage fails; the failure is recorded
with its stage name instead of being lost to a traceback.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import pathlib
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .meshing import build_mesh
from .assembly import assemble
from .eigensolve import (analytic_spectrum, counting_by_inertia,
                         counting_from_spectrum, lowest_eigs)
from .heat import GrowthBound, heat_trace
from .asymptotics import time_ladder, trace_limit, weyl_fit, weyl_predict
from .blowup import (blowup_kernel_limit, blowup_ladder,
                     local_spectral_convergence_experiment)
from .geometry import check_bishop_gromov, check_doubling, check_noncollapsing
from .spaces import WeightSpec, cone, interval

try:
    from importlib.metadata import version as _pkg_version

    VERSION = _pkg_version("weyllab")
except Exception:  # pragma: no cover - not installed
    VERSION = "0.0.0"


# ---------------------------------------------------------------------------
# manifest plumbing
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class Assertion:
    """One checked claim with its measured/predicted numbers."""

    name: str
    passed: bool
    measured: Optional[float] = None
    predicted: Optional[float] = None
    rel_error: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


@dataclasses.dataclass
class RunManifest:
    """What a run produced: files, timings, assertion outcomes, errors."""

    digest: str
    kind: str
    label: str
    version: str
    seed: int
    run_dir: str
    timings: dict
    files: list
    assertions: list
    error: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(a.passed for a in self.assertions)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d

    def write(self, path) -> pathlib.Path:
        path = pathlib.Path(path)
        if path.name not in self.files:
            self.files.append(path.name)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True,
                                   default=_json_scalar) + "\n")
        return path


def _json_scalar(x):
    """Let stray numpy scalars through the manifest serialization."""
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON-serializable: {type(x).__name__}")


def load_manifest(path) -> RunManifest:
    doc = json.loads(pathlib.Path(path).read_text())
    doc.pop("passed", None)
    doc["assertions"] = [Assertion(**a) for a in doc.get("assertions", [])]
    return RunManifest(**doc)


class _Stages:
    """Per-stage wall-clock bookkeeping; remembers where a failure happened."""

    def __init__(self):
        self.timings = {}
        self.current = "setup"

    def __call__(self, name: str):
        return _StageTimer(self, name)


class _StageTimer:
    def __init__(self, stages: _Stages, name: str):
        self.stages, self.name = stages, name

    def __enter__(self):
        self.stages.current = self.name
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.stages.timings[self.name] = round(time.perf_counter() - self.t0, 6)
        return False


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(run_dir: pathlib.Path, files: list, name: str, header, rows):
    path = run_dir / name
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    files.append(name)
    return path


def _rel(measured: float, predicted: float) -> float:
    return abs(measured - predicted) / abs(predicted)


def _rel_assert(name: str, measured: float, predicted: float, tol: float,
                detail: str = "") -> Assertion:
    rel = _rel(measured, predicted)
    return Assertion(name, rel <= tol, float(measured), float(predicted),
                     float(rel), float(tol), detail)


# ---------------------------------------------------------------------------
# the experiment kinds
# ---------------------------------------------------------------------------


def _oracle_available(cfg: ExperimentConfig) -> bool:
    return cfg.space.weight.is_unit and cfg.domain is None


def _run_solve(cfg, run_dir, files, assertions, stage):
    solved = []
    for h in cfg.resolutions:
        with stage(f"solve-h={h:g}"):
            op = assemble(build_mesh(cfg.space, h, domain=cfg.domain))
            solved.append((h, lowest_eigs(op, cfg.modes, tol=cfg.solver_tol,
                                          want_vectors=False)))
    rows = [(h, i + 1, lam, res)
            for h, spec in solved
            for i, (lam, res) in enumerate(zip(spec.eigenvalues,
                                               spec.residuals))]
    _write_csv(run_dir, files, "eigenvalues.csv",
               ("h", "index", "eigenvalue", "residual"), rows)

    finest = solved[-1][1].eigenvalues
    ordered = bool(np.all(finest > 0) and np.all(np.diff(finest) >= 0))
    assertions.append(Assertion("spectrum-positive-increasing", ordered,
                                detail=f"{len(finest)} modes"))

    tables = {f"h={h:g}": spec.eigenvalues for h, spec in solved}
    if _oracle_available(cfg):
        with stage("oracle"):
            lam_max = float(finest[-1]) * 1.2 + 10.0
            exact = analytic_spectrum(cfg.space, lam_max).eigenvalues
        if len(exact) >= cfg.modes:
            exact = exact[:cfg.modes]
            _write_csv(run_dir, files, "oracle.csv",
                       ("index", "eigenvalue"),
                       [(i + 1, lam) for i, lam in enumerate(exact)])
            errs = [float(np.max(np.abs(spec.eigenvalues / exact - 1.0)))
                    for _, spec in solved]
            assertions.append(Assertion(
                "oracle-agreement", errs[-1] <= cfg.tolerance,
                measured=errs[-1], predicted=0.0, rel_error=errs[-1],
                tolerance=cfg.tolerance,
                detail=f"worst of {cfg.modes} modes at h={solved[-1][0]:g}"))
            if len(solved) >= 2:
                h1, h2 = solved[-2][0], solved[-1][0]
                order = math.log(errs[-2] / errs[-1]) / math.log(h1 / h2)
                assertions.append(Assertion(
                    "convergence-order", order >= 1.5, measured=order,
                    predicted=2.0, tolerance=1.5,
                    detail=f"h={h1:g} -> h={h2:g}"))
            tables["exact"] = exact
    if cfg.plots:
        from . import plots

        files.append(pathlib.Path(plots.spectrum_plot(
            run_dir / "spectrum.svg", tables, label=cfg.label)).name)


def _run_count(cfg, run_dir, files, assertions, stage):
    with stage("assemble"):
        op = assemble(build_mesh(cfg.space, cfg.resolutions[-1]))
    lo, hi, n = cfg.grid
    grid = np.geomspace(lo, hi, n)
    with stage("inertia"):
        count = counting_by_inertia(op, grid)
    _write_csv(run_dir, files, "counting.csv", ("lambda", "count"),
               list(zip(count.grid, count.counts)))

    if cfg.modes:
        with stage("solve"):
            spec = lowest_eigs(op, cfg.modes, tol=cfg.solver_tol,
                               want_vectors=False)
        comparable = count.counts < cfg.modes
        by_solve = np.searchsorted(spec.eigenvalues, grid[comparable],
                                   side="right")
        mismatches = int(np.sum(by_solve != count.counts[comparable]))
        assertions.append(Assertion(
            "inertia-agrees-with-solve", mismatches == 0,
            measured=float(mismatches), predicted=0.0, tolerance=0.0,
            detail=f"{int(comparable.sum())} grid points compared"))

    if cfg.oracle and _oracle_available(cfg):
        with stage("oracle"):
            exact = analytic_spectrum(cfg.space, float(grid[-1]))
        _write_csv(run_dir, files, "oracle.csv", ("lambda", "count"),
                   [(x, exact.count(float(x))) for x in grid])
    if cfg.plots:
        from . import plots

        k = cfg.space.dim
        files.append(pathlib.Path(plots.counting_plot(
            run_dir / "counting.svg", count.grid, count.counts,
            weyl_predict(cfg.space), k / 2.0, label=cfg.label)).name)


def _run_trace(cfg, run_dir, files, assertions, stage):
    k = cfg.space.dim
    with stage("assemble"):
        op = assemble(build_mesh(cfg.space, cfg.resolutions[-1]))
    m = cfg.modes or op.reliable_band
    with stage("solve"):
        spec = lowest_eigs(op, m, tol=cfg.solver_tol, want_vectors=False)
    t0, rungs, ratio = cfg.times
    times = time_ladder(t0, rungs, ratio)
    with stage("trace"):
        tail = GrowthBound.from_eigenvalues(spec.eigenvalues, exponent=k / 2.0)
        trace = heat_trace(spec, times, tail=tail)
        est = trace_limit(trace, k)
    mid = trace.midpoint()
    _write_csv(run_dir, files, "trace.csv",
               ("t", "partial", "lower", "upper", "scaled"),
               [(t, z, lo_, up, t ** (k / 2.0) * zm)
                for t, z, lo_, up, zm in zip(trace.times, trace.values,
                                             trace.lower, trace.upper, mid)])

    predicted = weyl_predict(cfg.space) * math.gamma(k / 2.0 + 1.0)
    assertions.append(_rel_assert("trace-limit", est.limit, predicted,
                                  cfg.tolerance,
                                  detail=f"{m} modes, {rungs} rungs"))
    res_rel = abs(est.residual) / abs(est.limit)
    assertions.append(Assertion(
        "ladder-residual", res_rel <= cfg.tolerance / 2.0,
        measured=res_rel, tolerance=cfg.tolerance / 2.0,
        detail="last-two-rung difference over the limit"))
    if cfg.plots:
        from . import plots

        files.append(pathlib.Path(plots.trace_plot(
            run_dir / "trace.svg", trace.times,
            trace.times ** (k / 2.0) * mid, predicted, k,
            label=cfg.label)).name)


def _run_weyl(cfg, run_dir, files, assertions, stage):
    k = cfg.space.dim
    if cfg.oracle:
        with stage("oracle"):
            count = analytic_spectrum(cfg.space, cfg.window[1] * 1.02)
    elif cfg.grid is not None:
        with stage("assemble"):
            op = assemble(build_mesh(cfg.space, cfg.resolutions[-1]))
        lo, hi, n = cfg.grid
        with stage("inertia"):
            count = counting_by_inertia(op, np.geomspace(lo, hi, n))
    else:
        with stage("assemble"):
            op = assemble(build_mesh(cfg.space, cfg.resolutions[-1]))
        with stage("solve"):
            m = min(cfg.modes, op.reliable_band)
            count = counting_from_spectrum(
                lowest_eigs(op, m, tol=cfg.solver_tol, want_vectors=False))

    exponent = cfg.fixed_exponent if cfg.fixed_exponent is not None else k / 2.0
    with stage("fit"):
        fit = weyl_fit(count, cfg.window, fixed_exponent=exponent)

    if count.eigenvalues is not None:
        inside = ((count.eigenvalues >= cfg.window[0])
                  & (count.eigenvalues <= cfg.window[1]))
        lam = np.unique(count.eigenvalues[inside])
    else:
        inside = (count.grid >= cfg.window[0]) & (count.grid <= cfg.window[1])
        lam = count.grid[inside]
    counts = np.array([count.count(float(x)) for x in lam])
    _write_csv(run_dir, files, "ratio.csv", ("lambda", "count", "ratio"),
               [(x, c, c / x ** exponent) for x, c in zip(lam, counts)])

    predicted = weyl_predict(cfg.space)
    assertions.append(_rel_assert(
        "weyl-constant", fit.constant, predicted, cfg.tolerance,
        detail=f"{fit.method}, {fit.points} points in "
               f"[{cfg.window[0]:g}, {cfg.window[1]:g}]"))
    if cfg.plots:
        from . import plots

        files.append(pathlib.Path(plots.counting_plot(
            run_dir / "counting.svg", lam, counts, predicted, k / 2.0,
            label=cfg.label)).name)


def _run_blowup(cfg, run_dir, files, assertions, stage):
    with stage("ladder"):
        ladder = blowup_ladder(cfg.space, cfg.point, cfg.ball_radius,
                               cfg.scales, m=cfg.modes, t=cfg.time)
    with stage("extrapolate"):
        est = blowup_kernel_limit(cfg.space, cfg.point, cfg.ball_radius,
                                  cfg.scales, t=cfg.time, m=cfg.modes,
                                  ladder=ladder)
    _write_csv(run_dir, files, "spectra.csv",
               ("scale", "index", "eigenvalue"),
               [(r, i + 1, lam)
                for r, spec in zip(ladder.scales, ladder.spectra)
                for i, lam in enumerate(spec.eigenvalues)])
    _write_csv(run_dir, files, "kernel.csv", ("scale", "b", "value"),
               list(zip(ladder.scales, ladder.b_values, ladder.kernel_values)))
    assertions.append(_rel_assert(
        "kernel-limit", est.limit, est.predicted, cfg.tolerance,
        detail=f"{len(cfg.scales)} scales, t={cfg.time:g}"))
    if cfg.plots:
        from . import plots

        files.append(pathlib.Path(plots.ladder_plot(
            run_dir / "ladder.svg", ladder.scales, ladder.kernel_values,
            est.predicted, est.limit, label=cfg.label)).name)


def _convergence_family(cfg):
    params = np.asarray(cfg.params, dtype=float)
    if cfg.family == "shrinking-interval":
        members = [interval(2.0 - 2.0 * s) for s in params]
        return members, interval(2.0), False
    if cfg.family == "cone-angle":
        members = [cone(1.0, math.pi + s) for s in params]
        return members, cone(1.0, math.pi), True
    members = [interval(math.pi, WeightSpec("sinusoidal", (1.0, 0.5 * s, 1.0)))
               for s in params]
    return members, interval(math.pi), True


def _run_convergence(cfg, run_dir, files, assertions, stage):
    members, limit, boundary_ok = _convergence_family(cfg)
    with stage("experiment"):
        report = local_spectral_convergence_experiment(
            members, cfg.limit_radius, cfg.modes, limit,
            params=cfg.params, boundary_condition_ok=boundary_ok,
            tol=cfg.tolerance)
    _write_csv(run_dir, files, "convergence.csv", ("param", "worst_rel"),
               list(zip(report.params, report.rel_errors)))
    rows = [(p, i + 1, lam)
            for p, lams in zip(report.params, report.eigenvalues)
            for i, lam in enumerate(lams)]
    rows += [(0.0, i + 1, lam)
             for i, lam in enumerate(report.limit_eigenvalues)]
    _write_csv(run_dir, files, "eigenvalues.csv",
               ("param", "index", "eigenvalue"), rows)
    assertions.append(Assertion(
        "convergence-flag", report.converged == cfg.expect_convergence,
        measured=float(report.rel_errors[-1]),
        predicted=0.0 if cfg.expect_convergence else None,
        tolerance=cfg.tolerance,
        detail=f"{cfg.family}: converged={report.converged}, "
               f"expected={cfg.expect_convergence}, "
               f"boundary_ok={report.boundary_condition_ok}"))
    if cfg.plots:
        from . import plots

        files.append(pathlib.Path(plots.convergence_plot(
            run_dir / "convergence.svg", report.params, report.rel_errors,
            cfg.tolerance, label=f"{cfg.label} ({cfg.family})")).name)


def _default_center(space):
    if space.kind == "interval":
        return space.lengths[0] / 2.0
    if space.kind == "rectangle":
        return (space.lengths[0] / 2.0, space.lengths[1] / 2.0)
    return (0.0, 0.0)


def _run_geometry(cfg, run_dir, files, assertions, stage):
    space = cfg.space
    p = cfg.point if cfg.point is not None else _default_center(space)
    if cfg.radii:
        radii = np.asarray(cfg.radii, dtype=float)
    else:
        top = 2.0 * space.boundary_distance(space.as_point(p))
        radii = np.geomspace(top / 64.0, top, 24)
    with stage("bishop-gromov"):
        bg = check_bishop_gromov(space, p, radii, tol=cfg.tolerance)
    with stage("doubling"):
        db = check_doubling(space, p, float(radii[0]), float(radii[-1]))
    with stage("noncollapsing"):
        nc = check_noncollapsing(space, seed=cfg.seed)
    q = bg.quantities
    _write_csv(run_dir, files, "geometry.csv",
               ("r", "mu", "model", "ratio"),
               list(zip(q["radii"], q["mu"], q["model"], q["ratios"])))
    for rep in (bg, db, nc):
        assertions.append(Assertion(rep.name, bool(rep.holds),
                                    measured=float(rep.worst),
                                    tolerance=float(rep.tolerance),
                                    detail=rep.branch))
    if cfg.plots:
        from . import plots

        files.append(pathlib.Path(plots.geometry_plot(
            run_dir / "geometry.svg", q["radii"], q["ratios"],
            label=cfg.label)).name)


_DISPATCH = {
    "solve": _run_solve,
    "count": _run_count,
    "trace": _run_trace,
    "weyl": _run_weyl,
    "blowup": _run_blowup,
    "convergence": _run_convergence,
    "geometry-checks": _run_geometry,
}


# ---------------------------------------------------------------------------
# run / batch / report
# ---------------------------------------------------------------------------


def run(config: ExperimentConfig) -> RunManifest:
    """Execute one experiment; always leaves a manifest in the run dir."""
    run_dir = config.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    stages = _Stages()
    files: list = []
    assertions: list = []
    error = None
    try:
        _DISPATCH[config.kind](config, run_dir, files, assertions, stages)
    except Exception as exc:  # crash-safety: the manifest must still appear
        error = {"stage": stages.current, "type": type(exc).__name__,
                 "message": str(exc)}
    manifest = RunManifest(config.digest, config.kind, config.label, VERSION,
                           config.seed, str(run_dir), stages.timings, files,
                           assertions, error)
    manifest.write(run_dir / "manifest.json")
    return manifest


def run_batch(configs: Sequence[ExperimentConfig],
              workers: int = 1) -> list:
    """Run independent experiments concurrently, preserving input order."""
    if workers <= 1 or len(configs) <= 1:
        return [run(c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))


REPORT_HEADER = ("label", "kind", "digest", "assertion", "status",
                 "measured", "predicted", "rel_error", "tolerance", "detail")


@dataclasses.dataclass
class ReportTable:
    """Aggregated predicted-vs-measured table over a set of manifests."""

    header: tuple
    rows: list

    @property
    def passed(self) -> bool:
        return all(row[4] == "pass" for row in self.rows)

    def markdown(self) -> str:
        lines = ["| " + " | ".join(self.header) + " |",
                 "|" + "---|" * len(self.header)]
        for row in self.rows:
            lines.append("| " + " | ".join(_fmt(x) for x in row) + " |")
        return "\n".join(lines)

    def write_csv(self, path) -> pathlib.Path:
        path = pathlib.Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header)
            for row in self.rows:
                writer.writerow([_fmt(x) for x in row])
        return path


def report(manifests: Sequence[RunManifest]) -> ReportTable:
    """One row per assertion (plus one per stage error), flagged pass/fail."""
    rows = []
    for man in manifests:
        for a in man.assertions:
            rows.append((man.label, man.kind, man.digest, a.name,
                         "pass" if a.passed else "FAIL",
                         a.measured, a.predicted, a.rel_error, a.tolerance,
                         a.detail))
        if man.error is not None:
            rows.append((man.label, man.kind, man.digest,
                         f"stage:{man.error['stage']}", "FAIL",
                         None, None, None, None,
                         f"{man.error['type']}: {man.error['message']}"))
    return ReportTable(REPORT_HEADER, rows)


def render_report(table: ReportTable, out_dir, plots: bool = False) -> list:
    """Write the summary CSV (and optionally the overview figure)."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [table.write_csv(out_dir / "summary.csv")]
    if plots and table.rows:
        from . import plots as figs

        names = [f"{r[0]}:{r[3]}" for r in table.rows]
        rels = [r[7] for r in table.rows]
        tols = [r[8] for r in table.rows]
        ok = [r[4] == "pass" for r in table.rows]
        written.append(pathlib.Path(figs.report_plot(
            out_dir / "summary.svg", names, rels, tols, ok)))
    return written
