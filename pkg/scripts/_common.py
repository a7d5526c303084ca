"""Shared helpers for the figure scripts: run a config, then plot its CSV outputs."""

import argparse
import json
import sys
from pathlib import Path

from fpheom import parse_config, run_experiment, run_sweep
from fpheom.csvio import read_csv

HERE = Path(__file__).resolve().parent


def parse_args(name):
    p = argparse.ArgumentParser(description=f"Data and plot for {name}.")
    p.add_argument("--config", default=str(HERE / "configs" / f"{name}.json"))
    p.add_argument("--out", help="output directory (default: the config's output)")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    p.add_argument("--plot-only", action="store_true", help="reuse existing CSV files")
    return p.parse_args()


def run(args):
    cfg = parse_config(Path(args.config).read_text())
    out = Path(args.out or cfg.output)
    if not args.plot_only:
        manifests = run_sweep(cfg, out, args.jobs) if cfg.sweep.values else [run_experiment(cfg, out)]
        for m in manifests:
            for f in m.failures:
                print(f"failed: {f['task']}: {f['message']}", file=sys.stderr)
    return cfg, out


def point_dirs(cfg, out):
    """(value, directory) per sweep point, or a single entry for a plain run."""
    if not cfg.sweep.values:
        return [(getattr(cfg.bath, cfg.sweep.param), out)]
    doc = json.loads((out / "sweep.json").read_text())
    return [(p["value"], out / p["directory"]) for p in doc["points"]]


def load(path):
    return read_csv(path) if Path(path).exists() else None


def figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt
