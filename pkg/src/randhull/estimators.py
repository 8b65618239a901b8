"""Monte Carlo estimators of the intrinsic-volume deficit V_j(K) - E V_j(K_n).

Three routes are available and are meant to cross-check each other:

* Direct     -- hull area/volume of the cloud (j = d, d in {2, 3});
* Support    -- mean-width identity over random directions (j = 1);
* Projection -- Kubota + Fubini: coverage of random shadows by the
  projected cloud, decided point by point with ``in_hull``.

Replicate k of any estimator draws only from ``derive_stream(seed, k)``, so
results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bodies import Ball, Body, Ellipsoid, alpha
from .errors import HypothesisViolation, NumericalError, RouteError
from .functionals import ball_limit_integral, kubota_coefficient
from .hull import hull_measure_2d, hull_measure_3d, in_hull_many
from .linalg import Frame, SeedSpec, map_replicates, random_rotation, random_subspace
from .results import Estimate
from .sampling import Density, Uniform, cap_mass, cap_mass_mc, sample_boundary_points

DIRECT, SUPPORT, PROJECTION = "Direct", "Support", "Projection"
ROUTES = (DIRECT, SUPPORT, PROJECTION)
N_DIRECTIONS = 256


def _as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    if isinstance(seed, np.random.Generator):
        return SeedSpec(int(seed.integers(0, 2**63)))
    return SeedSpec(int(seed))


def direction_set(d: int, m: int = N_DIRECTIONS) -> np.ndarray:
    """m quasi-uniform unit vectors closed under u -> -u."""
    half = m // 2
    if d == 2:
        phi = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if d == 3:
        k = np.arange(half) + 0.5
        z = 1 - 2 * k / half
        r = np.sqrt(1 - z**2)
        phi = np.pi * (1 + 5**0.5) * k
        U = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    else:
        g = np.random.default_rng(12345).standard_normal((half, d))
        U = g / np.linalg.norm(g, axis=1, keepdims=True)
    return np.vstack([U, -U])


def direct_route(j: int, d: int) -> str:
    if j == d and d in (2, 3):
        return DIRECT
    if j == 1:
        return SUPPORT
    raise RouteError(f"no direct route for j={j}, d={d}; use deficit_projection")


def deficit_direct(body: Body, density: Density | None, j: int, n: int, reps: int, seed,
                   threads: int = 1, n_directions: int = N_DIRECTIONS) -> Estimate:
    """Deficit from the hull measure (j = d) or the mean-width identity (j = 1)."""
    if reps < 2:
        raise ValueError("need reps >= 2 for a standard error")
    d = body.d
    route = direct_route(j, d)
    seed = _as_seed(seed)

    if route == DIRECT:
        target = body.intrinsic_volume(d)
        measure = hull_measure_2d if d == 2 else (lambda P: hull_measure_3d(P)[0])

        def one(rng):
            P = sample_boundary_points(body, density, n, rng)
            if n < d + 1:
                return target
            return target - measure(P)
    else:
        base = direction_set(d, n_directions)
        scale = d * alpha(d) / alpha(d - 1)

        def one(rng):
            P = sample_boundary_points(body, density, n, rng)
            U = base @ random_rotation(d, rng).T
            gap = body.support(U) - (P @ U.T).max(axis=0)
            return scale * float(gap.mean())

    samples = map_replicates(one, seed, reps, threads)
    return Estimate.from_samples(samples, n=n, route=route)


def deficit_projection(body: Body, density: Density | None, j: int, n: int, reps: int,
                       y_samples: int, seed, threads: int = 1, tol: float = 1e-9) -> Estimate:
    """Deficit as the Haar average of the shadow area not covered by the projected cloud."""
    if reps < 2:
        raise ValueError("need reps >= 2 for a standard error")
    d = body.d
    if not 1 <= j <= d:
        raise RouteError(f"order j must be in [1, {d}]")
    coef = kubota_coefficient(d, j)
    seed = _as_seed(seed)

    def one(rng):
        frame = Frame.standard(d, d) if j == d else random_subspace(d, j, rng)
        P = sample_boundary_points(body, density, n, rng) @ frame.columns
        lo, hi = body.frame_box(frame)
        Y = rng.uniform(lo, hi, (y_samples, j))
        in_shadow = np.asarray(body.projected_contains(frame, Y, tol), dtype=bool)
        covered = np.zeros(y_samples, dtype=bool)
        covered[in_shadow] = in_hull_many(P, Y[in_shadow], tol)
        missed = np.count_nonzero(in_shadow & ~covered)
        return coef * float(np.prod(hi - lo)) * missed / y_samples

    samples = map_replicates(one, seed, reps, threads)
    return Estimate.from_samples(samples, n=n, route=PROJECTION)


def deficit(body: Body, density: Density | None, j: int, n: int, reps: int, seed, route: str = "auto",
            y_samples: int = 200, threads: int = 1) -> Estimate:
    """Dispatch to a route by name; "auto" prefers the direct routes."""
    if route == "auto":
        try:
            route = direct_route(j, body.d)
        except RouteError:
            route = PROJECTION
    if route in (DIRECT, SUPPORT):
        if direct_route(j, body.d) != route:
            raise RouteError(f"route {route!r} does not apply to j={j}, d={body.d}")
        return deficit_direct(body, density, j, n, reps, seed, threads)
    if route == PROJECTION:
        return deficit_projection(body, density, j, n, reps, y_samples, seed, threads)
    raise RouteError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# cap profile


@dataclass(frozen=True)
class CapProfileResult:
    x: np.ndarray
    t: np.ndarray
    s: np.ndarray
    s_stderr: np.ndarray
    ratio: np.ndarray  # t^{-(d-1)/2} s(t)
    fitted_limit: float
    closed_form: float  # inf where the Gauss curvature vanishes
    G: float
    increasing: bool
    diverging: bool
    log_slope: float  # slope of log ratio vs log t; ~0 at curved points

    @property
    def relative_error(self) -> float:
        if not math.isfinite(self.closed_form):
            return math.inf
        return abs(self.fitted_limit - self.closed_form) / self.closed_form


def cap_limit_closed_form(body: Body, density: Density, x) -> float:
    """Small-cap limit of t^{-(d-1)/2} s(t) at a boundary point with positive Gauss curvature."""
    d = body.d
    x = np.asarray(x, dtype=float)
    gauss = float(body.gauss_curvature(x))
    if gauss <= 0:
        return math.inf
    rho = float(density.pdf(body, x[None])[0])
    h = float(body.normal(x) @ x)
    return rho * 2 ** ((d - 1) / 2) * h ** ((d - 1) / 2) * gauss ** -0.5 * alpha(d - 1)


def cap_scale(body: Body, density: Density, x) -> float:
    """G(x) = alpha_{d-1}^{-1/(d-1)} rho(x)^{-1/(d-1)} H_{d-1}(x)^{1/(2(d-1))}."""
    d = body.d
    x = np.asarray(x, dtype=float)
    rho = float(density.pdf(body, x[None])[0])
    gauss = float(body.gauss_curvature(x))
    return alpha(d - 1) ** (-1 / (d - 1)) * rho ** (-1 / (d - 1)) * gauss ** (1 / (2 * (d - 1)))


def cap_profile(body: Body, density: Density | None, x, t_grid, *, method: str = "auto",
                samples: int = 10**6, seed=0, fit_points: int = 4) -> CapProfileResult:
    """Cap masses along a shrinking t grid and their extrapolated small-cap limit."""
    density = Uniform() if density is None else density
    d = body.d
    x = np.asarray(x, dtype=float)
    if body.rolling_radius is None:
        raise HypothesisViolation("cap profiles need a body with a rolling ball")
    t = np.sort(np.asarray(t_grid, dtype=float))
    t_max = body.rolling_radius / body.circumradius
    if len(t) < 3 or t[0] <= 0 or t[-1] >= t_max:
        raise ValueError(f"t grid must hold >= 3 values inside (0, {t_max:.4g})")

    if method == "mc" or (method == "auto" and not isinstance(body, (Ball, Ellipsoid))):
        rng = np.random.default_rng(seed)
        vals = cap_mass_mc(body, density, x, t, samples, rng)
    else:
        vals = [cap_mass(body, density, x, ti, method=method) for ti in t]
    s = np.array([v[0] for v in vals])
    se = np.array([v[1] for v in vals])
    ratio = s * t ** (-(d - 1) / 2)

    k = min(max(fit_points, 2), len(t))
    coef = np.polyfit(t[:k], ratio[:k], 1)
    fitted = float(coef[1])
    slope = float(np.polyfit(np.log(t), np.log(ratio), 1)[0])
    closed = cap_limit_closed_form(body, density, x)
    gauss = float(body.gauss_curvature(x))
    G = cap_scale(body, density, x) if gauss > 0 else 0.0
    return CapProfileResult(
        x=x, t=t, s=s, s_stderr=se, ratio=ratio, fitted_limit=fitted, closed_form=closed, G=G,
        increasing=bool(np.all(np.diff(s) > 0)), diverging=bool(slope < -0.25), log_slope=slope,
    )


# ---------------------------------------------------------------------------
# rate fitting and calibration


@dataclass(frozen=True)
class RateFit:
    exponent: float
    log_constant: float
    exponent_ci: tuple[float, float]
    n_grid: tuple
    exponent_stderr: float
    chi2_dof: float

    @property
    def constant(self) -> float:
        return math.exp(self.log_constant)


def fit_rate(pairs, level: float = 0.95) -> RateFit:
    """Weighted least squares of log(mean) on log(n); weights from stderr by the delta method."""
    pairs = sorted(pairs, key=lambda p: p[0])
    n = np.array([p[0] for p in pairs], dtype=float)
    if len(np.unique(n)) < 3:
        raise ValueError("rate fit needs at least 3 distinct n")
    est = [p[1] for p in pairs]
    mean = np.array([e.mean if isinstance(e, Estimate) else float(e) for e in est])
    se = np.array([e.stderr if isinstance(e, Estimate) else 0.0 for e in est])
    if np.any(mean <= 0):
        raise ValueError("rate fit needs positive means")
    x, y = np.log(n), np.log(mean)
    sigma = se / mean
    weighted = bool(np.all(sigma > 0))
    w = 1 / sigma**2 if weighted else np.ones_like(x)
    X = np.stack([np.ones_like(x), x], axis=1)
    XtW = X.T * w
    cov = np.linalg.inv(XtW @ X)
    beta = cov @ XtW @ y
    resid = y - X @ beta
    dof = len(x) - 2
    chi2 = float(np.sum(w * resid**2))
    chi2_dof = chi2 / dof if dof > 0 else float("nan")
    if weighted:
        cov = cov * max(1.0, chi2_dof if dof > 0 else 1.0)
    else:
        cov = cov * (chi2 / dof if dof > 0 else 0.0)
    se_slope = float(math.sqrt(max(cov[1, 1], 0.0)))
    q = stats.t.ppf(0.5 + level / 2, max(dof, 1))
    slope = float(beta[1])
    return RateFit(slope, float(beta[0]), (float(slope - q * se_slope), float(slope + q * se_slope)),
                   tuple(int(v) for v in n), se_slope, chi2_dof)


@dataclass(frozen=True)
class Calibration:
    j: int
    d: int
    c_jd: float
    stderr: float
    n_grid: tuple
    radius: float = 1.0
    kappa: float = 1.0
    estimates: tuple = field(default=(), repr=False)


def extrapolate(n_grid, estimates, exponent: float, kappa: float):
    """Fit y(n) = a + b n^{-kappa} to y = mean * n^{exponent}; returns (a, stderr_a)."""
    n = np.asarray(n_grid, dtype=float)
    y = np.array([e.mean for e in estimates]) * n**exponent
    se = np.array([e.stderr for e in estimates]) * n**exponent
    X = np.stack([np.ones_like(n), n**-kappa], axis=1)
    w = 1 / np.maximum(se, 1e-300) ** 2
    XtW = X.T * w
    try:
        cov = np.linalg.inv(XtW @ X)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("extrapolation fit is singular") from exc
    beta = cov @ XtW @ y
    resid = y - X @ beta
    dof = len(n) - 2
    if dof > 0:
        cov = cov * max(1.0, float(np.sum(w * resid**2)) / dof)
    return float(beta[0]), float(math.sqrt(cov[0, 0]))


def default_kappa(d: int) -> float:
    return min(1.0, 2.0 / (d - 1))


def calibrate_c(j: int, d: int, n_grid, reps: int, seed, *, radius: float = 1.0, route: str = "auto",
                y_samples: int = 200, kappa: float | None = None, threads: int = 1) -> Calibration:
    """Universal constant c^{(j,d)} from simulations on a ball with uniform density."""
    n_grid = list(n_grid)
    if len(n_grid) < 3 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be increasing with at least 3 values")
    kappa = default_kappa(d) if kappa is None else kappa
    seed = _as_seed(seed)
    body = Ball(d, radius)
    ests = []
    for i, n in enumerate(n_grid):
        cell_seed = SeedSpec(seed.master_seed, seed.stream_index * 1000 + i)
        ests.append(deficit(body, Uniform(), j, n, reps, cell_seed, route=route, y_samples=y_samples, threads=threads))
    a, se_a = extrapolate(n_grid, ests, 2.0 / (d - 1), kappa)
    integral = ball_limit_integral(d, j, radius)
    return Calibration(j, d, a / integral, se_a / integral, tuple(n_grid), radius, kappa, tuple(ests))


def rate_band(body: Body, j: int = 1) -> tuple[float, float]:
    """Admissible band for the fitted log-log exponent of the V_j deficit.

    Bodies with a rolling ball decay like n^{-2/(d-1)} for every order; for
    polytopes only the mean width (j = 1) has a known rate, n^{-1/(d-1)}.
    """
    d = body.d
    if body.rolling_radius is None:
        if j != 1:
            raise HypothesisViolation("no decay rate is known for this order on a body without a rolling ball")
        centre = -1.0 / (d - 1)
    else:
        centre = -2.0 / (d - 1)
    width = 0.2 / (d - 1)
    return centre - width, centre + width
