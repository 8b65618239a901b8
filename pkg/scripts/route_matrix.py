"""Direct/support routes against the projection-membership route on a fixed cell matrix.

    python3 scripts/route_matrix.py --reps 2000 --proj-reps 1500
"""

import argparse

from randhull.bodies import Ball, Capsule, Ellipsoid
from randhull.estimators import deficit_direct, deficit_projection
from randhull.linalg import SeedSpec
from randhull.sampling import Uniform

CELLS = [
    (Ball(2), 1, 100), (Ball(2), 2, 100), (Ball(3), 1, 200), (Ball(3), 3, 200),
    (Ellipsoid((2.0, 1.0)), 2, 100), (Capsule(3, 1.0, 2.0), 3, 200),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--proj-reps", type=int, default=1500)
    ap.add_argument("--y-samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    worst = 0.0
    for i, (body, j, n) in enumerate(CELLS):
        a = deficit_direct(body, Uniform(), j, n, args.reps, SeedSpec(args.seed, i))
        p = deficit_projection(body, Uniform(), j, n, args.proj_reps, args.y_samples, SeedSpec(args.seed, 100 + i))
        z = a.z_against(p)
        worst = max(worst, z)
        print(f"{body.describe():<46} j={j} n={n:>4}  {a.route:>8} {a}   Projection {p}   z={z:.2f}")
    print(f"largest z = {worst:.2f} ({'PASS' if worst < 3 else 'FAIL'} at 3 sigma)")


if __name__ == "__main__":
    main()
