"""n * volume deficit of the capsule against the caps-only prediction.

    python3 scripts/capsule_convergence.py --reps 1000 --out capsule.csv
"""

import argparse
import math
import time

from randhull.bodies import Capsule
from randhull.estimators import deficit_direct, extrapolate
from randhull.experiments import ResultRecord, append_records, build_id
from randhull.functionals import QuadSpec, limit_integral, schuett_werner_constant
from randhull.linalg import SeedSpec
from randhull.sampling import Uniform


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", default="250,500,1000,2000,4000,8000")
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=31)
    ap.add_argument("--kappa", type=float, default=0.5)
    ap.add_argument("--out")
    args = ap.parse_args()

    body = Capsule(3, 1.0, 2.0)
    target = schuett_werner_constant(3) * limit_integral(body, Uniform(), 3, QuadSpec(96, 96)).value
    grid = [int(v) for v in args.grid.split(",")]
    print(f"caps-only prediction c*I_3 = {target:.4f} (32pi = {32 * math.pi:.4f})")
    ests, bid = [], build_id()
    for i, n in enumerate(grid):
        t0 = time.perf_counter()
        est = deficit_direct(body, Uniform(), 3, n, args.reps, SeedSpec(args.seed, i))
        ests.append(est)
        print(f"n={n:>6}  n*deficit = {n * est.mean:8.4f} ± {n * est.stderr:.4f}   ratio {n * est.mean / target:.4f}")
        if args.out:
            append_records(args.out, [ResultRecord("capsule-convergence", body.kind, 3, 3, "uniform", n, est.route,
                                                   args.reps, est.mean, est.stderr, target / n, time.perf_counter() - t0, args.seed, bid)])
    tail = grid[-4:] if len(grid) >= 4 else grid
    limit, se = extrapolate(tail, ests[-len(tail):], 1.0, args.kappa)
    print(f"extrapolated (kappa={args.kappa}) on n={tail}: {limit:.4f} ± {se:.4f}  ratio {limit / target:.4f}")


if __name__ == "__main__":
    main()
