"""Fast invariant suite behind the ``selftest`` subcommand.

Each check returns (passed, detail). Sample counts are small enough for the
whole suite to finish in well under a minute on one core.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from .bodies import Ball, Capsule, Cube, Ellipsoid, alpha
from .functionals import kubota_estimate
from .hull import hull_measure_3d, in_hull, incremental_hull_3d
from .linalg import random_rotation, random_subspace, random_unit_vector
from .sampling import CurvaturePower, Uniform, normalization_check


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<34} {self.detail}  ({self.seconds:.1f}s)"


# -- core linear algebra -----------------------------------------------------


def check_haar(rng, draws: int = 4000):
    worst = 0.0
    details = []
    for d, j in [(2, 1), (3, 1), (3, 2), (5, 2)]:
        acc = np.zeros((d, d))
        resid = 0.0
        for _ in range(draws):
            F = random_subspace(d, j, rng)
            resid = max(resid, F.orthonormality_residual())
            acc += F.projector()
        mean = acc / draws
        # each projector entry has variance below 1/4; 6 sigma band
        dev = np.abs(mean - (j / d) * np.eye(d)).max()
        worst = max(worst, dev / (6 * 0.5 / math.sqrt(draws)))
        details.append(resid)
    U = random_unit_vector(4, rng, size=20000)
    second = U.T @ U / len(U)
    ok_sphere = np.abs(second - np.eye(4) / 4).max() < 6 * 0.5 / math.sqrt(len(U))
    R = random_rotation(4, rng)
    ok_rot = np.allclose(R @ R.T, np.eye(4), atol=1e-12) and abs(np.linalg.det(R) - 1) < 1e-12
    ok = worst < 1 and max(details) < 1e-12 and ok_sphere and ok_rot
    return ok, f"mean projector dev {worst:.2f} of band, orthonormality {max(details):.1e}"


# -- hull membership ---------------------------------------------------------


def _lp_member(P, q) -> bool:
    m = len(P)
    A = np.vstack([P.T, np.ones(m)])
    b = np.append(q, 1.0)
    return linprog(np.zeros(m), A_eq=A, b_eq=b, bounds=(0, None), method="highs").status == 0


def check_membership(rng, instances: int = 1000):
    mismatches = 0
    ambiguous = 0
    for _ in range(instances):
        d = int(rng.integers(2, 5))
        m = int(rng.integers(d + 1, 25))
        P = rng.standard_normal((m, d))
        q = rng.standard_normal(d) * rng.uniform(0.2, 1.5)
        eq = ConvexHull(P).equations
        if abs(np.max(eq[:, :-1] @ q + eq[:, -1])) < 1e-7:
            ambiguous += 1
            continue
        if in_hull(P, q).inside != _lp_member(P, q):
            mismatches += 1
    return mismatches == 0, f"{instances} instances, {mismatches} mismatches, {ambiguous} near-ties skipped"


def check_hull3d(rng):
    worst = 0.0
    euler_ok = True
    for m in (8, 30, 200):
        P = rng.standard_normal((m, 3))
        H = incremental_hull_3d(P)
        vol, area = hull_measure_3d(P)
        ref = ConvexHull(P)
        worst = max(worst, abs(H.volume - ref.volume) / ref.volume, abs(area - ref.area) / ref.area)
        euler_ok &= H.euler_characteristic() == 2
    return worst < 1e-9 and euler_ok, f"incremental vs Qhull rel. gap {worst:.1e}, Euler ok={euler_ok}"


# -- bodies ------------------------------------------------------------------


def _steiner(body, eps):
    d = body.d
    return sum(body.intrinsic_volume(j) * alpha(d - j) * eps ** (d - j) for j in range(d + 1))


def check_steiner(rng, samples: int = 400_000):
    worst = 0.0
    eps = 0.3
    for d in (2, 3):
        b = Ball(d, 1.2)
        worst = max(worst, abs(_steiner(b, eps) - alpha(d) * 1.5**d) / (alpha(d) * 1.5**d))
        c = Capsule(d, 0.7, 1.3)
        r = 0.7 + eps
        direct = alpha(d) * r**d + alpha(d - 1) * r ** (d - 1) * 1.3
        worst = max(worst, abs(_steiner(c, eps) - direct) / direct)
    mc_z = 0.0
    for d in (2, 3):
        cube = Cube(d, 1.0)
        half = 0.5 + eps
        X = rng.uniform(-half, half, (samples, d))
        dist = np.linalg.norm(X - np.clip(X, -0.5, 0.5), axis=1)
        hit = dist <= eps
        vol = (2 * half) ** d * hit.mean()
        se = (2 * half) ** d * hit.std() / math.sqrt(samples)
        mc_z = max(mc_z, abs(vol - _steiner(cube, eps)) / se)
    return worst < 1e-12 and mc_z < 4, f"closed-form rel. gap {worst:.1e}, cube Monte Carlo z {mc_z:.2f}"


def check_curvature(rng):
    e = Ellipsoid((2.0, 1.0, 1.5))
    u = random_unit_vector(3, rng, size=200)
    X = e.support_point(u)
    K = e.gauss_curvature(X)
    gap = np.abs(K - e.gauss_curvature_closed_form(X)).max()
    q = e.boundary_quadrature(96)
    gb = q.integrate(e.gauss_curvature(q.points))
    ell = Ellipsoid((2.0, 1.0))
    th = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    pts = np.stack([2 * np.cos(th), np.sin(th)], axis=1)
    k2 = ell.principal_curvatures(pts)[:, 0]
    exact = 2.0 / (4 * np.sin(th) ** 2 + np.cos(th) ** 2) ** 1.5
    gap2 = np.abs(k2 - exact).max()
    ok = gap < 1e-9 and abs(gb - 4 * math.pi) < 1e-6 and gap2 < 1e-9
    return ok, f"shape operator gap {max(gap, gap2):.1e}, total Gauss curvature {gb:.8f} (4pi)"


def check_kubota(rng):
    worst = 0.0
    for body in (Ball(3), Ellipsoid((2.0, 1.0, 1.5)), Cube(3)):
        for j in (1, 2):
            est = kubota_estimate(body, j, 300, 2000, rng)
            exact = body.intrinsic_volume(j)
            # a ball's j = 1 shadows are all the same segment, so the stderr can vanish
            z = abs(est.mean - exact) / max(est.stderr, 1e-12 * exact)
            worst = max(worst, z)
    return worst < 4, f"max |z| over 6 cells {worst:.2f}"


def check_density(rng):
    worst = 0.0
    cases = [
        (Ellipsoid((2.0, 1.0)), CurvaturePower(1 / 3)),
        (Ellipsoid((2.0, 1.0, 1.5)), CurvaturePower(0.25)),
        (Capsule(3, 1.0, 2.0), Uniform()),
    ]
    for body, dens in cases:
        mean, se = normalization_check(body, dens, rng, 100_000)
        worst = max(worst, abs(mean - 1) / max(se, 1e-12))
    return worst < 4, f"density mass max |z| {worst:.2f}"


CHECKS = {
    "core-linalg: Haar subspaces": check_haar,
    "hull: membership vs LP": check_membership,
    "hull: incremental 3-D vs Qhull": check_hull3d,
    "bodies: Steiner polynomial": check_steiner,
    "bodies: curvature": check_curvature,
    "functionals: Kubota vs analytic": check_kubota,
    "sampling: density normalization": check_density,
}


def run_selftest(seed: int = 0, log=print) -> list[CheckResult]:
    results = []
    for i, (name, fn) in enumerate(CHECKS.items()):
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, reported like one
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
        log(res.line())
        results.append(res)
    return results
