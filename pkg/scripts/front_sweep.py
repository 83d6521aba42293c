#!/usr/bin/env python3
"""Sweep the (alpha, mu) grid of one or more presets and write CSV + plot scripts.

    python scripts/front_sweep.py test1 test3 --out results/ --workers 4
"""
import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from paretoheat.cli import run_front, write_outputs
from paretoheat.config import PRESETS, preset


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("presets", nargs="*", default=["test1", "test3", "test5"])
    parser.add_argument("--out", default="results")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--full-resolution", action="store_true")
    args = parser.parse_args()

    for name in args.presets:
        if name not in PRESETS:
            sys.exit(f"unknown preset {name}; choose from {', '.join(PRESETS)}")
        cfg = preset(name, args.full_resolution)
        csv_path = Path(args.out) / f"{name}.csv"
        cfg = replace(cfg, output=replace(cfg.output, csv=str(csv_path), plot_script=True, timing=True))
        t0 = time.perf_counter()
        cells = run_front(cfg, args.workers)
        write_outputs(cfg, cells, str(csv_path))
        bad = sum(1 for c in cells if c.report is None or not c.report.converged)
        print(f"{name}: {len(cells)} cells, {bad} not converged, {time.perf_counter() - t0:.1f} s -> {csv_path}")


if __name__ == "__main__":
    main()
