"""Mean-width deficit exponents: disc (rolling ball) against square (polytope).

    python3 scripts/rate_separation.py --reps 10000
"""

import argparse

from randhull.bodies import Ball, Cube
from randhull.estimators import deficit_direct, fit_rate, rate_band
from randhull.linalg import SeedSpec
from randhull.sampling import Uniform


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", default="32,64,128,256,512,1024")
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()
    grid = [int(v) for v in args.grid.split(",")]

    for k, body in enumerate((Ball(2), Cube(2))):
        pairs = []
        for i, n in enumerate(grid):
            est = deficit_direct(body, Uniform(), 1, n, args.reps, SeedSpec(args.seed, 100 * k + i))
            pairs.append((n, est))
            print(f"{body.describe():<24} n={n:>5}  deficit {est.mean:.6g} ± {est.stderr:.2g}")
        fit = fit_rate(pairs)
        lo, hi = rate_band(body)
        verdict = "PASS" if lo <= fit.exponent <= hi else "FAIL"
        print(f"  exponent {fit.exponent:.4f}  CI [{fit.exponent_ci[0]:.4f}, {fit.exponent_ci[1]:.4f}]  "
              f"band [{lo:.2f}, {hi:.2f}]  {verdict}\n")


if __name__ == "__main__":
    main()
