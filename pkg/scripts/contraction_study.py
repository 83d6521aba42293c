#!/usr/bin/env python3
"""How the fixed-point iteration behaves as mu shrinks: iterations, final ratio and outcome."""
import argparse

import numpy as np

from paretoheat.algorithms import SolverOptions, fixed_point_semilinear
from paretoheat.validation import problem


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", default="test3")
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--max-iter", type=int, default=200)
    args = parser.parse_args()

    for mu in (10.0, 5.0, 1.0, 0.5, 0.1, 0.05, 0.01):
        spec = problem(args.preset, args.alpha, mu)
        r = fixed_point_semilinear(spec, SolverOptions(max_iter=args.max_iter))
        h = np.array(r.history)
        ratio = h[-1] / h[-2] if h.size > 2 else float("nan")
        status = "converged" if r.converged else r.message
        print(f"mu={mu:<6g} iterations={r.iterations:<4d} last ratio={ratio:8.3e}  {status}")


if __name__ == "__main__":
    main()
