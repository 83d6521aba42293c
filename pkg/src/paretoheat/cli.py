"""Command-line experiment runner.

    paretoheat solve CONFIG [--alpha A] [--mu M]
    paretoheat front CONFIG [--workers N]
    paretoheat validate [--preset default]
    paretoheat presets list

``CONFIG`` is a TOML file or the name of a built-in preset.  Exit codes:
0 success, 1 config error, 2 solver non-convergence (``solve`` only),
3 validation failure.
"""
from __future__ import annotations

import argparse
import io
import sys
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .algorithms import SolveReport, solve
from .config import PRESETS, ConfigError, ExperimentConfig, resolve
from .functionals import ProblemSpec, SpecError
from .models import SolverError

CSV_COLUMNS = (
    "alpha", "mu", "model", "algorithm", "J1", "J2", "norm_u_minus_u1", "norm_u_minus_u2",
    "norm_v", "iterations", "converged", "residual", "wall_ms",
)
CSV_HEADER = ",".join(CSV_COLUMNS)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_VALIDATION = 0, 1, 2, 3


@dataclass
class Cell:
    spec: ProblemSpec
    algorithm: int
    report: SolveReport | None
    error: str = ""

    def row(self, timing: bool) -> str:
        s, r = self.spec, self.report
        nan = float("nan")
        if r is None or r.costs is None:
            vals = (nan,) * 5
            its, conv, res, wall = (r.iterations if r else 0), False, nan, (r.wall_time if r else 0.0)
        else:
            c = r.costs
            vals = (c.J1, c.J2, c.tracking1, c.tracking2, c.control_norm)
            its, conv, res, wall = r.iterations, r.converged, r.residual, r.wall_time
        fields = [_num(s.alpha), _num(s.mu), s.model.name, str(self.algorithm)]
        fields += [_num(x) for x in vals]
        fields += [str(its), "true" if conv else "false", _num(res), _num(1e3 * wall) if timing else "0"]
        return ",".join(fields)


def _num(x: float) -> str:
    return repr(float(x))


def _solve_cell(spec: ProblemSpec, cfg: ExperimentConfig) -> Cell:
    try:
        return Cell(spec, cfg.algorithm, solve(spec, cfg.algorithm, cfg.solver))
    except (SolverError, SpecError, ArithmeticError, ValueError) as exc:
        return Cell(spec, cfg.algorithm, None, f"{type(exc).__name__}: {exc}")


def run_cells(cfg: ExperimentConfig, workers: int | None = None) -> list[Cell]:
    """Solve every ``(alpha, mu)`` cell; results come back in alpha-major order."""
    specs = cfg.problems()
    workers = cfg.output.workers if workers is None else workers
    if workers <= 1 or len(specs) == 1:
        return [_solve_cell(s, cfg) for s in specs]
    # warm the shared step factorization so threads do not race to build it
    specs[0].targets
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: _solve_cell(s, cfg), specs))


def csv_text(cells: list[Cell], timing: bool = False) -> str:
    return "\n".join([CSV_HEADER] + [c.row(timing) for c in cells]) + "\n"


def dump_field(path: Path, spec: ProblemSpec, values: np.ndarray, t: float):
    """Plain-text grid: three header lines (dimensions, spacing, time), then the values."""
    g = spec.grid
    arr = g.as_array(values)
    buf = io.StringIO()
    buf.write("dims " + " ".join(str(n) for n in g.shape) + "\n")
    buf.write("spacing " + " ".join(repr(h) for h in g.spacing) + "\n")
    buf.write(f"time {t!r}\n")
    np.savetxt(buf, arr.reshape(g.shape[0], -1), fmt="%.17g")
    path.write_text(buf.getvalue())


PLOT_SCRIPT = '''\
"""Plots for {csv}: tracking norms, control norm and iterations against alpha, one curve per mu."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
rows = list(csv.DictReader(open(path)))
series = defaultdict(list)
for r in rows:
    series[float(r["mu"])].append(r)

panels = [
    ("norm_u_minus_u1", "|u(T) - u1(T)| on O1"),
    ("norm_u_minus_u2", "|u(T) - u2(T)| on O2"),
    ("norm_v", "|v|"),
    ("iterations", "iterations"),
]
fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.5))
for ax, (col, label) in zip(axes, panels):
    for mu, rs in sorted(series.items()):
        rs = sorted(rs, key=lambda r: float(r["alpha"]))
        ax.plot([float(r["alpha"]) for r in rs], [float(r[col]) for r in rs], marker="o", ms=3, label=f"mu = {{mu:g}}")
    ax.set_xlabel("alpha")
    ax.set_title(label)
axes[0].legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def write_outputs(cfg: ExperimentConfig, cells: list[Cell], csv_path: str | None, out=None):
    text = csv_text(cells, cfg.output.timing)
    if csv_path is None:
        (out or sys.stdout).write(text)
        return
    path = Path(csv_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    if cfg.output.fields:
        for c in cells:
            if c.report is not None and c.report.final_state is not None:
                name = f"{path.stem}_alpha{c.spec.alpha:g}_mu{c.spec.mu:g}_uT.txt"
                dump_field(path.parent / name, c.spec, c.report.final_state, cfg.T)
    if cfg.output.plot_script:
        (path.parent / f"{path.stem}_plot.py").write_text(PLOT_SCRIPT.format(csv=path.name))


def run_single(cfg: ExperimentConfig, alpha: float | None = None, mu: float | None = None) -> Cell:
    cfg = cfg.single(alpha, mu)
    if len(cfg.alpha) != 1 or len(cfg.mu) != 1:
        raise ConfigError(
            f"model: solve needs exactly one alpha and one mu (config has {len(cfg.alpha)} and {len(cfg.mu)}); "
            "pass --alpha/--mu or use the front command"
        )
    return run_cells(cfg, workers=1)[0]


def run_front(cfg: ExperimentConfig, workers: int | None = None) -> list[Cell]:
    return run_cells(cfg, workers)


def _load(args) -> ExperimentConfig:
    cfg = resolve(args.config, args.full_resolution)
    out = cfg.output
    return replace(cfg, output=replace(
        out,
        csv=args.csv or out.csv,
        timing=out.timing if args.timing is None else args.timing,
        fields=out.fields or args.fields,
        plot_script=out.plot_script or args.plot_script,
    ))


def cmd_solve(args) -> int:
    cfg = _load(args)
    cell = run_single(cfg, args.alpha, args.mu)
    write_outputs(cfg, [cell], cfg.output.csv)
    if cell.error:
        print(f"solve failed: {cell.error}", file=sys.stderr)
        return EXIT_NONCONVERGED
    if not cell.report.converged:
        print(f"not converged: {cell.report.message}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_front(args) -> int:
    cfg = _load(args)
    cells = run_front(cfg, args.workers)
    write_outputs(cfg, cells, cfg.output.csv)
    for c in cells:
        if c.error or not c.report.converged:
            reason = c.error or c.report.message
            print(f"alpha={c.spec.alpha:g} mu={c.spec.mu:g}: {reason}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_preset

    t0 = _time.perf_counter()
    results = run_preset(args.preset, corrupt_adjoint=args.corrupt_adjoint)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed in {_time.perf_counter() - t0:.1f} s")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_presets(args) -> int:
    for name, (desc, _) in PRESETS.items():
        print(f"{name:16s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paretoheat", description="Pareto equilibria for controlled heat equations")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="TOML config file or preset name")
        sp.add_argument("--csv", help="write the CSV here instead of the configured path or stdout")
        sp.add_argument("--fields", action="store_true", help="dump u(T) for every cell")
        sp.add_argument("--plot-script", action="store_true", help="write a matplotlib script next to the CSV")
        sp.add_argument("--timing", dest="timing", action="store_true", default=None, help="fill the wall_ms column")
        sp.add_argument("--no-timing", dest="timing", action="store_false", help="write wall_ms = 0")
        sp.add_argument("--full-resolution", action="store_true", help="finer preset grids (slow)")

    s = sub.add_parser("solve", help="one (alpha, mu) cell")
    common(s)
    s.add_argument("--alpha", type=float)
    s.add_argument("--mu", type=float)
    s.set_defaults(func=cmd_solve)

    f = sub.add_parser("front", help="sweep every (alpha, mu) cell of the config")
    common(f)
    f.add_argument("--workers", type=int, help="worker threads (default from config)")
    f.set_defaults(func=cmd_front)

    v = sub.add_parser("validate", help="run the built-in correctness checks")
    v.add_argument("--preset", default="default", help="default or acceptance")
    v.add_argument("--corrupt-adjoint", action="store_true", help="flip the adjoint sign to see the checks fail")
    v.set_defaults(func=cmd_validate)

    pr = sub.add_parser("presets", help="built-in experiment presets")
    pr.add_argument("action", choices=["list"])
    pr.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"config error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
