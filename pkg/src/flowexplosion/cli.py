"""Command-line entry point: one subcommand per experiment."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .experiments.config import EXPERIMENTS, ConfigError, load_config, load_seeds
from .experiments.plots import emit_plots
from .experiments.runner import RunManifest, default_config, run
from .freidlin import CellError

HELP = {
    "gelfand": "flow-free threshold on the disk at several resolutions vs the value 2",
    "bounds": "lower/upper bound sandwich over the catalog and an amplitude sweep",
    "fig2": "whole-domain vs per-cell vs effective thresholds for the four-cell flow",
    "equidist": "decay of the integral of |u.grad phi|^2 with the amplitude",
    "stratify": "exit time on the separatrix band vs the interior",
    "compressible": "collapse of mu1 and lambda* for the radial flow u = 4 n x",
    "shear_growth": "threshold growth for shear flow vs plateau for a cellular flow",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flowexplosion", description="Explosion thresholds in advection-diffusion problems.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", type=Path, help="experiment config file (sectioned key = value)")
        p.add_argument("--out", type=Path, help="output directory (default: config out_dir or results/<name>)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for independent tasks")
        p.add_argument("--seed-cells", type=Path, help="file with one 'x, y' cell seed per line")
    p = sub.add_parser("plots", help="(re)write gnuplot scripts for an existing run directory")
    p.add_argument("run_dir", type=Path)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plots":
        m = RunManifest.from_json((args.run_dir / "manifest.json").read_text(), out_dir=args.run_dir)
        for s in emit_plots(m):
            print(args.run_dir / s)
        return 0
    try:
        if args.config:
            cfg = load_config(args.config)
            if cfg.experiment != args.command:
                raise ConfigError("experiment.name", f"config is for {cfg.experiment!r}, not {args.command!r}")
        else:
            cfg = default_config(args.command, out_dir=f"results/{args.command}")
        if args.seed_cells:
            cfg = replace(cfg, seeds=load_seeds(args.seed_cells)).validate()
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be at least 1")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run(cfg, args.out, jobs=args.jobs)
    except CellError as exc:
        print(f"error: cells.seeds: {exc}", file=sys.stderr)
        return 2
    for a in manifest.assertions:
        print(f"{'PASS' if a.passed else 'FAIL'}  {a.name}  {a.detail}")
    for t in manifest.tasks:
        if t.status != "ok":
            print(f"TASK FAILED  {t.name}: {t.error.splitlines()[0]}")
    print(f"manifest: {Path(manifest.out_dir) / 'manifest.json'}")
    return 0 if manifest.passed else 1


if __name__ == "__main__":
    sys.exit(main())
