"""Experiment configuration: YAML in, a validated ExperimentConfig out.

The config file is one YAML mapping.  Keys common to every experiment:

    kind: solve | count | trace | weyl | blowup | convergence | geometry-checks
    label: free-form name            (optional; defaults to the kind)
    seed: 0                          (optional; feeds sampling plans)
    out: runs                        (optional; parent of the run directory)
    plots: false                     (optional; SVG emission)
    tolerance: 0.05                  (optional; the kind's assertion bar)

Kind-specific keys (everything else is rejected, by dotted path):

    space:                           solve, count, trace, weyl, geometry-checks, blowup
      kind: interval | rectangle | disk | cone
      length: 1.0                    (interval)
      lengths: [1.0, 1.0]            (rectangle)
      radius: 1.0                    (disk, cone)
      angle: 3.14159                 (cone)
      weight: {form: affine, coefficients: [1.0, 0.5]}     (optional)
    mesh: {h: 0.01} or {resolutions: [0.02, 0.01]}         solve/count/trace/weyl
    domain: {center: 0.5, radius: 0.25}                    solve (ball restriction)
    solver: {modes: 40, tol: 1.0e-7}                       most kinds
    window: [400.0, 4000.0]                                weyl
    fixed_exponent: 1.0                                    weyl (default k/2)
    oracle: true                                           weyl/count (analytic side)
    grid: {lo: 400.0, hi: 4000.0, n: 24}                   count / weyl-by-inertia
    times: {t0: 0.4, rungs: 5, ratio: 4.0}                 trace
    time: 1.0                                              blowup
    point: 0.5 or [x, y]                                   blowup / geometry-checks
    ball_radius: 6.0                                       blowup
    scales: [0.12, 0.06, 0.03]                             blowup (decreasing)
    family: shrinking-interval | cone-angle | weighted-interval    convergence
    params: [0.5, 0.25, 0.125]                             convergence (decreasing)
    limit_radius: 1.0                                      convergence
    expect_convergence: false                              convergence
    radii: [0.05, 0.1, 0.2, 0.4]                           geometry-checks

Every value is validated before any computation runs; a bad or unknown key
raises ConfigError carrying the dotted field path.  The run directory is
named by a digest of the *effective* configuration (defaults resolved,
seed included), so identical configs land in identical directories.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import pathlib
from typing import Optional

import yaml

from .errors import ConfigError, WeylLabError
from .meshing import BallDomain
from .spaces import SpaceSpec, WeightSpec, cone, disk, interval, rectangle

KINDS = ("solve", "count", "trace", "weyl", "blowup", "convergence",
         "geometry-checks")

FAMILIES = ("shrinking-interval", "cone-angle", "weighted-interval")

# default assertion bar per experiment kind
DEFAULT_TOLERANCE = {
    "solve": 1e-3,
    "count": 0.0,
    "trace": 0.02,
    "weyl": 0.05,
    "blowup": 0.05,
    "convergence": 0.02,
    "geometry-checks": 1e-9,
}

_MISSING = object()


class _Node:
    """Cursor into a config mapping that remembers its dotted path."""

    def __init__(self, mapping, path: str = ""):
        if not isinstance(mapping, dict):
            raise ConfigError(path or "<root>", "expected a mapping")
        self._map = mapping
        self._path = path
        self._seen = set()

    def _at(self, key: str) -> str:
        return f"{self._path}.{key}" if self._path else str(key)

    def has(self, key: str) -> bool:
        return key in self._map

    def raw(self, key: str, default=_MISSING):
        if key not in self._map:
            if default is _MISSING:
                raise ConfigError(self._at(key), "required key is missing")
            return default
        self._seen.add(key)
        return self._map[key]

    def number(self, key: str, default=_MISSING, positive: bool = False) -> float:
        v = self.raw(key, default)
        if v is default and key not in self._map:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(self._at(key), f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(self._at(key), "must be finite")
        if positive and v <= 0:
            raise ConfigError(self._at(key), "must be positive")
        return v

    def integer(self, key: str, default=_MISSING, minimum: Optional[int] = None) -> int:
        v = self.raw(key, default)
        if v is default and key not in self._map:
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(self._at(key), f"expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(self._at(key), f"must be >= {minimum}")
        return v

    def boolean(self, key: str, default=_MISSING) -> bool:
        v = self.raw(key, default)
        if v is default and key not in self._map:
            return v
        if not isinstance(v, bool):
            raise ConfigError(self._at(key), f"expected true/false, got {v!r}")
        return v

    def string(self, key: str, default=_MISSING, choices=None) -> str:
        v = self.raw(key, default)
        if v is default and key not in self._map:
            return v
        if not isinstance(v, str):
            raise ConfigError(self._at(key), f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigError(self._at(key),
                              f"must be one of {', '.join(choices)}; got {v!r}")
        return v

    def numbers(self, key: str, default=_MISSING, positive: bool = False,
                length: Optional[int] = None) -> tuple:
        v = self.raw(key, default)
        if v is default and key not in self._map:
            return v
        if not isinstance(v, (list, tuple)):
            raise ConfigError(self._at(key), "expected a list of numbers")
        out = []
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"{self._at(key)}[{i}]",
                                  f"expected a number, got {x!r}")
            if positive and x <= 0:
                raise ConfigError(f"{self._at(key)}[{i}]", "must be positive")
            out.append(float(x))
        if length is not None and len(out) != length:
            raise ConfigError(self._at(key), f"expected {length} entries")
        return tuple(out)

    def mapping(self, key: str, required: bool = False) -> Optional["_Node"]:
        if key not in self._map:
            if required:
                raise ConfigError(self._at(key), "required section is missing")
            return None
        self._seen.add(key)
        return _Node(self._map[key], self._at(key))

    def finish(self):
        extra = sorted(set(self._map) - self._seen)
        if extra:
            raise ConfigError(self._at(extra[0]), "unknown key")


# ---------------------------------------------------------------------------
# section parsers
# ---------------------------------------------------------------------------


def _parse_weight(node: Optional[_Node]):
    if node is None:
        return WeightSpec(), {"form": "unit", "coefficients": []}
    form = node.string("form", choices=("unit", "affine", "sinusoidal"))
    coeffs = node.numbers("coefficients", ())
    node.finish()
    try:
        w = WeightSpec(form, coeffs)
    except WeylLabError as exc:
        raise ConfigError(node._path, str(exc)) from exc
    return w, {"form": form, "coefficients": list(coeffs)}


def _parse_space(node: _Node):
    kind = node.string("kind", choices=("interval", "rectangle", "disk", "cone"))
    weight, weight_doc = _parse_weight(node.mapping("weight"))
    try:
        if kind == "interval":
            length = node.number("length", positive=True)
            space = interval(length, weight)
            doc = {"kind": kind, "length": length}
        elif kind == "rectangle":
            a, b = node.numbers("lengths", positive=True, length=2)
            space = rectangle(a, b, weight)
            doc = {"kind": kind, "lengths": [a, b]}
        elif kind == "disk":
            radius = node.number("radius", positive=True)
            space = disk(radius, weight)
            doc = {"kind": kind, "radius": radius}
        else:
            radius = node.number("radius", positive=True)
            angle = node.number("angle", positive=True)
            space = cone(radius, angle, weight)
            doc = {"kind": kind, "radius": radius, "angle": angle}
    except ConfigError:
        raise
    except (WeylLabError, ValueError) as exc:
        raise ConfigError(node._path, str(exc)) from exc
    node.finish()
    doc["weight"] = weight_doc
    return space, doc


def _parse_point(node: _Node, key: str, space: Optional[SpaceSpec], default=_MISSING):
    v = node.raw(key, default)
    if v is default and not node.has(key):
        return v
    path = node._at(key)
    if isinstance(v, (list, tuple)):
        pt = tuple(float(x) for x in v)
        if len(pt) != 2:
            raise ConfigError(path, "a planar point needs two coordinates")
    elif isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a point, got {v!r}")
    else:
        pt = float(v)
    if space is not None:
        try:
            space.as_point(pt)
        except (WeylLabError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from exc
    return pt


def _parse_mesh(node: _Node) -> tuple:
    mesh = node.mapping("mesh", required=True)
    if mesh.has("h") and mesh.has("resolutions"):
        raise ConfigError(mesh._at("resolutions"), "give either h or resolutions")
    if mesh.has("h"):
        res = (mesh.number("h", positive=True),)
    else:
        res = mesh.numbers("resolutions", positive=True)
        if len(res) == 0:
            raise ConfigError(mesh._at("resolutions"), "must not be empty")
        if any(b >= a for a, b in zip(res, res[1:])):
            raise ConfigError(mesh._at("resolutions"), "must strictly decrease")
    mesh.finish()
    return res


def _parse_solver(node: _Node, default_modes: int = 40):
    solver = node.mapping("solver")
    if solver is None:
        return default_modes, 1e-7
    modes = solver.integer("modes", default_modes, minimum=1)
    tol = solver.number("tol", 1e-7, positive=True)
    solver.finish()
    return modes, tol


def _parse_grid(node: _Node, required: bool) -> Optional[tuple]:
    grid = node.mapping("grid", required=required)
    if grid is None:
        return None
    lo = grid.number("lo", positive=True)
    hi = grid.number("hi", positive=True)
    n = grid.integer("n", minimum=2)
    grid.finish()
    if hi <= lo:
        raise ConfigError(grid._at("hi"), "must exceed lo")
    return (lo, hi, n)


# ---------------------------------------------------------------------------
# the validated configuration object
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """One experiment, fully validated, with its canonical digest."""

    kind: str
    label: str
    seed: int
    out_dir: pathlib.Path
    plots: bool
    tolerance: float
    payload: dict = dataclasses.field(repr=False)
    digest: str = ""
    space: Optional[SpaceSpec] = None
    resolutions: tuple = ()
    domain: Optional[BallDomain] = None
    modes: int = 40
    solver_tol: float = 1e-7
    window: Optional[tuple] = None
    fixed_exponent: Optional[float] = None
    oracle: bool = False
    grid: Optional[tuple] = None
    times: Optional[tuple] = None
    time: float = 1.0
    point: object = None
    ball_radius: Optional[float] = None
    scales: tuple = ()
    family: Optional[str] = None
    params: tuple = ()
    limit_radius: float = 1.0
    expect_convergence: Optional[bool] = None
    radii: tuple = ()

    @property
    def run_dir(self) -> pathlib.Path:
        return self.out_dir / self.digest

    def with_overrides(self, out: Optional[str] = None,
                       seed: Optional[int] = None,
                       plots: Optional[bool] = None) -> "ExperimentConfig":
        """Apply CLI-level overrides; a new seed re-digests the config."""
        cfg = self
        if out is not None:
            cfg = dataclasses.replace(cfg, out_dir=pathlib.Path(out))
        if plots is not None:
            cfg = dataclasses.replace(cfg, plots=plots)
        if seed is not None and seed != cfg.seed:
            payload = dict(cfg.payload, seed=seed)
            cfg = dataclasses.replace(cfg, seed=seed, payload=payload,
                                      digest=_digest(payload))
        return cfg


def _digest(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def parse_config(mapping: dict) -> ExperimentConfig:
    """Validate a parsed YAML mapping into an ExperimentConfig."""
    root = _Node(mapping)
    kind = root.string("kind", choices=KINDS)
    label = root.string("label", kind)
    seed = root.integer("seed", 0, minimum=0)
    out_dir = pathlib.Path(root.string("out", "runs"))
    plots = root.boolean("plots", False)
    tolerance = root.number("tolerance", DEFAULT_TOLERANCE[kind], positive=False)
    if tolerance < 0:
        raise ConfigError("tolerance", "must be nonnegative")

    payload = {"kind": kind, "label": label, "seed": seed,
               "tolerance": tolerance}
    fields = dict(kind=kind, label=label, seed=seed, out_dir=out_dir,
                  plots=plots, tolerance=tolerance)

    if kind in ("solve", "count", "trace", "weyl", "geometry-checks", "blowup"):
        space, space_doc = _parse_space(root.mapping("space", required=True))
        fields["space"] = space
        payload["space"] = space_doc

    if kind == "solve":
        fields["resolutions"] = _parse_mesh(root)
        dom = root.mapping("domain")
        if dom is not None:
            center = _parse_point(dom, "center", fields["space"])
            radius = dom.number("radius", positive=True)
            dom.finish()
            fields["domain"] = BallDomain(center, radius)
            payload["domain"] = {"center": center, "radius": radius}
        fields["modes"], fields["solver_tol"] = _parse_solver(root, 20)
    elif kind == "count":
        fields["resolutions"] = _parse_mesh(root)
        fields["grid"] = _parse_grid(root, required=True)
        fields["modes"], fields["solver_tol"] = _parse_solver(root, 0)
        fields["oracle"] = root.boolean("oracle", False)
    elif kind == "trace":
        fields["resolutions"] = _parse_mesh(root)
        fields["modes"], fields["solver_tol"] = _parse_solver(root, 0)
        times = root.mapping("times", required=True)
        t0 = times.number("t0", positive=True)
        rungs = times.integer("rungs", 5, minimum=2)
        ratio = times.number("ratio", 4.0, positive=True)
        times.finish()
        if ratio <= 1.0:
            raise ConfigError("times.ratio", "must exceed 1")
        fields["times"] = (t0, rungs, ratio)
        payload["times"] = {"t0": t0, "rungs": rungs, "ratio": ratio}
    elif kind == "weyl":
        window = root.numbers("window", positive=True, length=2)
        if window[1] <= window[0]:
            raise ConfigError("window[1]", "must exceed window[0]")
        fields["window"] = window
        payload["window"] = list(window)
        fields["oracle"] = root.boolean("oracle", False)
        fields["fixed_exponent"] = root.number("fixed_exponent", None)
        if fields["fixed_exponent"] is not None and fields["fixed_exponent"] <= 0:
            raise ConfigError("fixed_exponent", "must be positive")
        if fields["oracle"]:
            for key in ("mesh", "grid", "solver"):
                if root.has(key):
                    raise ConfigError(key, "not used when oracle: true")
        else:
            fields["resolutions"] = _parse_mesh(root)
            fields["grid"] = _parse_grid(root, required=False)
            fields["modes"], fields["solver_tol"] = _parse_solver(root, 200)
    elif kind == "blowup":
        fields["point"] = _parse_point(root, "point", fields["space"])
        fields["ball_radius"] = root.number("ball_radius", positive=True)
        scales = root.numbers("scales", positive=True)
        if len(scales) < 2:
            raise ConfigError("scales", "need at least two scales")
        if any(b >= a for a, b in zip(scales, scales[1:])):
            raise ConfigError("scales", "must strictly decrease")
        fields["scales"] = scales
        fields["time"] = root.number("time", 1.0, positive=True)
        fields["modes"], fields["solver_tol"] = _parse_solver(root, 40)
        payload.update(point=_point_doc(fields["point"]),
                       ball_radius=fields["ball_radius"],
                       scales=list(scales), time=fields["time"])
    elif kind == "convergence":
        family = root.string("family", choices=FAMILIES)
        params = root.numbers("params", (0.5, 0.25, 0.125), positive=True)
        if any(b >= a for a, b in zip(params, params[1:])):
            raise ConfigError("params", "must strictly decrease")
        if family == "shrinking-interval":
            for i, s in enumerate(params):
                j = 1.0 / s
                if abs(j - round(j)) > 1e-9 or round(j) < 2:
                    raise ConfigError(f"params[{i}]",
                                      "shrinking-interval params must be 1/j, j >= 2")
        default_r = {"shrinking-interval": 1.0, "cone-angle": 0.8,
                     "weighted-interval": 1.2}[family]
        fields["family"] = family
        fields["params"] = params
        fields["limit_radius"] = root.number("limit_radius", default_r,
                                             positive=True)
        fields["expect_convergence"] = root.boolean(
            "expect_convergence", family != "shrinking-interval")
        fields["modes"], fields["solver_tol"] = _parse_solver(root, 6)
        payload.update(family=family, params=list(params),
                       limit_radius=fields["limit_radius"],
                       expect_convergence=fields["expect_convergence"])
    else:  # geometry-checks
        fields["point"] = _parse_point(root, "point", fields["space"], None)
        radii = root.numbers("radii", (), positive=True)
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("radii", "must strictly increase")
        fields["radii"] = radii
        payload.update(point=_point_doc(fields["point"]), radii=list(radii))

    if fields.get("resolutions"):
        payload["mesh"] = {"resolutions": list(fields["resolutions"])}
    if fields.get("grid"):
        lo, hi, n = fields["grid"]
        payload["grid"] = {"lo": lo, "hi": hi, "n": n}
    if "modes" in fields:
        payload["solver"] = {"modes": fields["modes"], "tol": fields["solver_tol"]}
    if kind == "weyl":
        payload["oracle"] = fields["oracle"]
        payload["fixed_exponent"] = fields["fixed_exponent"]
    if kind == "count":
        payload["oracle"] = fields["oracle"]

    root.finish()
    return ExperimentConfig(payload=payload, digest=_digest(payload), **fields)


def _point_doc(pt):
    if pt is None:
        return None
    return list(pt) if isinstance(pt, tuple) else pt


def load_config(path) -> ExperimentConfig:
    """Read and validate one YAML experiment file."""
    p = pathlib.Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    if doc is None:
        raise ConfigError(str(path), "empty config")
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    return parse_config(doc)
