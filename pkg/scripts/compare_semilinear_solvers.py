#!/usr/bin/env python3
"""Fixed point vs simplified Newton on the semilinear preset: iterations and control gap per alpha."""
import argparse

import numpy as np

from paretoheat.algorithms import fixed_point_semilinear, newton_semilinear
from paretoheat.grid import control_norm
from paretoheat.validation import problem


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", default="test3")
    parser.add_argument("--mu", type=float, nargs="+", default=[1.0, 5.0, 10.0])
    parser.add_argument("--alphas", type=int, default=9, help="number of alpha values in (0, 1)")
    args = parser.parse_args()

    alphas = np.linspace(0.05, 0.95, args.alphas)
    print(f"{'mu':>5} {'alpha':>6} {'fp_it':>6} {'nw_it':>6} {'gap':>10} {'J_alpha':>12}")
    for mu in args.mu:
        for a in alphas:
            spec = problem(args.preset, float(a), mu)
            fp = fixed_point_semilinear(spec)
            nw = newton_semilinear(spec)
            gap = control_norm(spec.grid, spec.time, fp.control - nw.control)
            nw_it = nw.iterations if nw.converged else f"{nw.iterations}!"
            print(f"{mu:5g} {a:6.3f} {fp.iterations:6d} {nw_it:>6} {gap:10.2e} {fp.costs.blended(a):12.6f}")


if __name__ == "__main__":
    main()
