"""Command line interface for the experiment runner.

Exit codes: 0 all assertions pass, 1 assertion failure, 2 invalid
configuration, 3 runtime error inside a stage.
"""
from __future__ import annotations

import argparse
import sys

from . import runner
from .config import load_config
from .errors import ConfigError

# CLI verb -> config kind
_SUBCOMMAND_KIND = {
    "solve": "solve",
    "count": "count",
    "trace": "trace",
    "weyl": "weyl",
    "blowup": "blowup",
    "converge": "convergence",
    "geom": "geometry-checks",
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weyllab",
        description="Dirichlet spectra of model metric measure spaces: "
                    "Weyl asymptotics, heat traces, blow-ups.",
        epilog="exit codes: 0 pass, 1 assertion failure, 2 config error, "
               "3 runtime error",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in _SUBCOMMAND_KIND.items():
        p = sub.add_parser(name, help=f"run {kind} experiment configs")
        p.add_argument("--config", nargs="+", required=True, metavar="PATH",
                       help="YAML experiment file(s); kind must match")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="override the output directory")
        p.add_argument("--workers", type=int, default=1, metavar="N",
                       help="concurrent experiments (default 1)")
        p.add_argument("--seed", type=_u64, default=None,
                       help="override the config seed")
        p.add_argument("--plots", action="store_true", default=None,
                       help="emit SVG figures next to the CSVs")
    rep = sub.add_parser("report", help="aggregate manifests into one table")
    rep.add_argument("manifests", nargs="*", metavar="MANIFEST",
                     help="manifest.json paths from previous runs")
    rep.add_argument("--out", default=None, metavar="DIR",
                     help="write summary.csv and summary.svg here")
    return parser


def _run_experiments(args) -> int:
    expected = _SUBCOMMAND_KIND[args.command]
    try:
        configs = []
        for path in args.config:
            cfg = load_config(path)
            if cfg.kind != expected:
                raise ConfigError(
                    "kind", f"{path}: expected {expected!r}, got {cfg.kind!r}")
            configs.append(cfg.with_overrides(out=args.out, seed=args.seed,
                                              plots=args.plots))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    manifests = runner.run_batch(configs, workers=max(args.workers, 1))
    print(runner.report(manifests).markdown())
    for man in manifests:
        print(f"manifest: {man.run_dir}/manifest.json")
    if any(man.error is not None for man in manifests):
        return 3
    if not all(man.passed for man in manifests):
        return 1
    return 0


def _run_report(args) -> int:
    try:
        manifests = [runner.load_manifest(p) for p in args.manifests]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"cannot read manifest: {exc}", file=sys.stderr)
        return 3
    table = runner.report(manifests)
    print(table.markdown())
    if args.out is not None:
        for path in runner.render_report(table, args.out, plots=True):
            print(f"wrote: {path}")
    return 0 if table.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return _run_report(args)
    return _run_experiments(args)


if __name__ == "__main__":
    sys.exit(main())
