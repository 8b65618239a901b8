"""Curvature integral of the area law as a function of the density exponent beta.

The density rho ~ H^beta minimizing the integral is beta = 1/(d+1).

    python3 scripts/density_sweep.py --semiaxes 2,1
"""

import argparse

import numpy as np

from randhull.bodies import Ellipsoid
from randhull.functionals import density_functional


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--semiaxes", default="2,1")
    ap.add_argument("--betas", default=None, help="comma separated; default 0..0.8 in steps of 0.05")
    args = ap.parse_args()
    body = Ellipsoid(tuple(float(v) for v in args.semiaxes.split(",")))
    d = body.d
    betas = [float(b) for b in args.betas.split(",")] if args.betas else list(np.round(np.arange(0, 0.81, 0.05), 3))
    betas = sorted(set(betas) | {1 / (d + 1)})
    vals = [density_functional(body, b, d) for b in betas]
    best = betas[int(np.argmin(vals))]
    for b, v in zip(betas, vals):
        mark = "  <- 1/(d+1)" if abs(b - 1 / (d + 1)) < 1e-12 else ""
        print(f"beta={b:6.3f}  I_d = {v:12.4f}{mark}")
    print(f"minimum on this grid at beta = {best:.4f}")


if __name__ == "__main__":
    main()
