"""End-to-end runner: manifests, determinism, reports, CLI exit codes."""
import json
import math
import pathlib

import pytest

from weyllab import cli, load_manifest, parse_config, run, run_batch
from weyllab.runner import render_report, report

PI = math.pi


def solve_raw(out, plots=False):
    return {
        "kind": "solve",
        "label": "tiny-interval",
        "space": {"kind": "interval", "length": PI},
        "mesh": {"resolutions": [PI / 60, PI / 120]},
        "solver": {"modes": 5},
        "tolerance": 5e-3,
        "out": str(out),
        "plots": plots,
    }


def geom_raw(out):
    return {
        "kind": "geometry-checks",
        "label": "tiny-geom",
        "space": {"kind": "cone", "radius": 1.0, "angle": PI},
        "out": str(out),
    }


def crash_raw(out):
    # the interval oracle has too few jumps in this window: the weyl fit
    # raises mid-run and the manifest must still be written
    return {
        "kind": "weyl",
        "label": "narrow-window",
        "space": {"kind": "interval", "length": PI},
        "oracle": True,
        "window": [400.0, 420.0],
        "out": str(out),
    }


def test_run_writes_manifest_and_files(tmp_path):
    m = run(parse_config(solve_raw(tmp_path)))
    assert m.passed and m.error is None
    assert set(m.files) >= {"manifest.json", "eigenvalues.csv", "oracle.csv"}
    assert m.timings and all(v >= 0 for v in m.timings.values())
    loaded = load_manifest(pathlib.Path(m.run_dir) / "manifest.json")
    assert loaded.digest == m.digest
    assert [a.name for a in loaded.assertions] == [a.name for a in m.assertions]


def test_reruns_are_byte_identical(tmp_path):
    a = run(parse_config(solve_raw(tmp_path / "a", plots=True)))
    b = run(parse_config(solve_raw(tmp_path / "b", plots=True)))
    assert a.digest == b.digest
    for name in ("eigenvalues.csv", "oracle.csv", "spectrum.svg"):
        fa = (pathlib.Path(a.run_dir) / name).read_bytes()
        fb = (pathlib.Path(b.run_dir) / name).read_bytes()
        assert fa == fb, name


def test_crash_still_writes_manifest(tmp_path):
    m = run(parse_config(crash_raw(tmp_path)))
    assert not m.passed
    assert m.error is not None
    assert m.error["type"] == "WindowTooNarrow"
    assert m.error["stage"] == "fit"
    disk_copy = load_manifest(pathlib.Path(m.run_dir) / "manifest.json")
    assert disk_copy.error == m.error


def test_run_batch_preserves_order(tmp_path):
    cfgs = [parse_config(geom_raw(tmp_path)), parse_config(solve_raw(tmp_path))]
    manifests = run_batch(cfgs, workers=2)
    assert [m.label for m in manifests] == ["tiny-geom", "tiny-interval"]
    assert all(m.passed for m in manifests)


def test_report_table(tmp_path):
    ok = run(parse_config(geom_raw(tmp_path)))
    bad = run(parse_config(crash_raw(tmp_path)))
    table = report([ok, bad])
    assert not table.passed
    text = table.markdown()
    assert "tiny-geom" in text and "narrow-window" in text
    assert "FAIL" in text
    # every crash surfaces as a stage row
    assert any(r[3].startswith("stage:") for r in table.rows)
    files = render_report(table, tmp_path / "summary", plots=True)
    names = {f.name for f in files}
    assert {"summary.csv", "summary.svg"} <= names


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def write_yaml(path, raw):
    import yaml

    path.write_text(yaml.safe_dump(raw))
    return path


def test_cli_pass_and_report(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "solve.yaml", solve_raw(tmp_path / "runs"))
    assert cli.main(["solve", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "manifest:" in out
    manifest = next((tmp_path / "runs").glob("*/manifest.json"))
    assert cli.main(["report", str(manifest),
                     "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "summary.csv").exists()
    assert (tmp_path / "rep" / "summary.svg").exists()


def test_cli_assertion_failure_exits_1(tmp_path):
    raw = solve_raw(tmp_path / "runs")
    raw["tolerance"] = 1e-12          # unreachable bar, but no crash
    cfg = write_yaml(tmp_path / "bad_tol.yaml", raw)
    assert cli.main(["solve", "--config", str(cfg)]) == 1


def test_cli_config_error_exits_2(tmp_path):
    raw = solve_raw(tmp_path / "runs")
    raw["mesh"]["spacing"] = 0.1
    cfg = write_yaml(tmp_path / "broken.yaml", raw)
    assert cli.main(["solve", "--config", str(cfg)]) == 2
    # kind mismatch between subcommand and config
    cfg2 = write_yaml(tmp_path / "geom.yaml", geom_raw(tmp_path / "runs"))
    assert cli.main(["solve", "--config", str(cfg2)]) == 2
    # nothing may run when any config in the batch is invalid
    assert not (tmp_path / "runs").exists()


def test_cli_runtime_error_exits_3(tmp_path):
    cfg = write_yaml(tmp_path / "crash.yaml", crash_raw(tmp_path / "runs"))
    assert cli.main(["weyl", "--config", str(cfg)]) == 3
    manifest = next((tmp_path / "runs").glob("*/manifest.json"))
    assert json.loads(manifest.read_text())["error"]["type"] == "WindowTooNarrow"


def test_cli_seed_and_plots_overrides(tmp_path):
    cfg = write_yaml(tmp_path / "geom.yaml", geom_raw(tmp_path / "runs"))
    assert cli.main(["geom", "--config", str(cfg), "--seed", "9",
                     "--plots"]) == 0
    run_dir = next((tmp_path / "runs").glob("*"))
    doc = json.loads((run_dir / "manifest.json").read_text())
    assert doc["seed"] == 9
    assert any(name.endswith(".svg") for name in doc["files"])


def test_cli_empty_report_is_ok(tmp_path, capsys):
    assert cli.main(["report"]) == 0
