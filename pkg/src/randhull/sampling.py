"""Random points on the boundary of a convex body, with densities w.r.t. surface measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betainc

from .bodies import Ball, Body, BoundaryPoint, Capsule, Cube, Ellipsoid, alpha
from .errors import EnvelopeError, HypothesisViolation

MAX_REJECTION_DRAWS = 10**6


# ---------------------------------------------------------------------------
# densities


class Density:
    """Positive density on the boundary of a body, given up to normalization.

    Densities are body-independent descriptions; the body is passed to every
    evaluation so one config entry can be reused across bodies.
    """

    kind = "density"

    def unnormalized(self, body: Body, X) -> np.ndarray:
        raise NotImplementedError

    def sup_bound(self, body: Body) -> float:
        raise NotImplementedError

    def validate(self, body: Body) -> None:
        """Raise HypothesisViolation if the density is not positive and continuous on the body."""

    def normalizer(self, body: Body) -> float:
        return _normalizer(self, body)

    def pdf(self, body: Body, X) -> np.ndarray:
        return self.unnormalized(body, X) / self.normalizer(body)

    def is_uniform(self) -> bool:
        return False

    def params(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Uniform(Density):
    kind = "uniform"

    def unnormalized(self, body, X):
        X = np.asarray(X, dtype=float)
        return np.ones(X.shape[:-1])

    def sup_bound(self, body):
        return 1.0

    def is_uniform(self):
        return True


@dataclass(frozen=True)
class CurvaturePower(Density):
    """Density proportional to (Gauss curvature)^exponent."""

    exponent: float
    kind = "curvature_power"

    def validate(self, body):
        if self.exponent != 0 and isinstance(body, (Capsule, Cube)):
            if isinstance(body, Capsule) and body.length == 0:
                return
            raise HypothesisViolation(
                f"density not positive: Gauss curvature vanishes on part of the {body.kind} boundary, "
                f"so curvature_power(exponent={self.exponent}) is zero or unbounded there"
            )

    def unnormalized(self, body, X):
        self.validate(body)
        if self.exponent == 0:
            return np.ones(np.asarray(X).shape[:-1])
        return body.gauss_curvature(X) ** self.exponent

    def sup_bound(self, body):
        self.validate(body)
        if self.exponent == 0:
            return 1.0
        if isinstance(body, Ellipsoid):
            a = np.array(body.semiaxes)
            prod = float(np.prod(a**2))
            kmax = a.max() ** (body.d + 1) / prod
            kmin = a.min() ** (body.d + 1) / prod
            return max(kmax**self.exponent, kmin**self.exponent)
        # ball, or capsule of zero length
        return body.radius ** (-(body.d - 1) * self.exponent)

    def is_uniform(self):
        return self.exponent == 0

    def params(self):
        return {"kind": self.kind, "exponent": self.exponent}


@dataclass(frozen=True)
class Perturbed(Density):
    """base * (1 + amplitude * exp(-|x - x0|^2 / (2 width^2))), x0 the boundary point with outer normal center_normal."""

    base: Density
    center_normal: tuple
    amplitude: float
    width: float
    kind = "perturbed"

    def __post_init__(self):
        object.__setattr__(self, "center_normal", tuple(float(c) for c in self.center_normal))
        if self.amplitude <= -1:
            raise HypothesisViolation("perturbation amplitude must exceed -1 to keep the density positive")
        if self.width <= 0:
            raise ValueError("bump width must be positive")

    def center(self, body):
        return body.support_point(np.array(self.center_normal))

    def validate(self, body):
        self.base.validate(body)

    def unnormalized(self, body, X):
        X = np.asarray(X, dtype=float)
        r2 = np.sum((X - self.center(body)) ** 2, axis=-1)
        return self.base.unnormalized(body, X) * (1.0 + self.amplitude * np.exp(-r2 / (2 * self.width**2)))

    def sup_bound(self, body):
        return self.base.sup_bound(body) * (1.0 + max(self.amplitude, 0.0))

    def is_uniform(self):
        return self.amplitude == 0 and self.base.is_uniform()

    def params(self):
        return {
            "kind": self.kind,
            "base": self.base.params(),
            "center_normal": list(self.center_normal),
            "amplitude": self.amplitude,
            "width": self.width,
        }


@lru_cache(maxsize=256)
def _normalizer(density: Density, body: Body) -> float:
    if density.is_uniform():
        return float(body.surface_area)
    quad = body.boundary_quadrature(n=96, flat_nodes=96)
    return quad.integrate(density.unnormalized(body, quad.points))


def density_from_params(params: dict | None) -> Density:
    if params is None:
        return Uniform()
    params = dict(params)
    kind = params.pop("kind", "uniform")
    if kind == "uniform":
        if params:
            raise ValueError(f"unknown uniform density parameters {sorted(params)}")
        return Uniform()
    if kind == "curvature_power":
        out = CurvaturePower(float(params.pop("exponent")))
    elif kind == "perturbed":
        base = density_from_params(params.pop("base", None))
        out = Perturbed(base, tuple(params.pop("center_normal")), float(params.pop("amplitude")),
                        float(params.pop("width")))
    else:
        raise ValueError(f"unknown density kind {kind!r}")
    if params:
        raise ValueError(f"unknown {kind} density parameters {sorted(params)}")
    return out


# ---------------------------------------------------------------------------
# samplers


def _sphere(rng, size, d):
    g = rng.standard_normal((size, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _uniform_points(body: Body, size: int, rng: np.random.Generator) -> np.ndarray:
    d = body.d
    if isinstance(body, Ball):
        return body.radius * _sphere(rng, size, d)
    if isinstance(body, Ellipsoid):
        a = np.array(body.semiaxes)
        out = np.empty((0, d))
        drawn = 0
        while len(out) < size:
            m = max(16, int(1.3 * (size - len(out)) * a.max() / a.min()))
            drawn += m
            if drawn > MAX_REJECTION_DRAWS * max(size, 1):
                raise EnvelopeError("ellipsoid surface rejection loop did not terminate")
            U = _sphere(rng, m, d)
            accept = rng.random(m) * (1.0 / a.min()) < np.linalg.norm(U / a, axis=1)
            out = np.vstack([out, U[accept] * a])
        return out[:size]
    if isinstance(body, Capsule):
        n_cap = rng.binomial(size, body.cap_area / body.surface_area)
        caps = body.radius * _sphere(rng, n_cap, d)
        caps[:, body.axis] += body.half * np.sign(caps[:, body.axis])
        n_cyl = size - n_cap
        cyl = np.empty((n_cyl, d))
        others = [i for i in range(d) if i != body.axis]
        cyl[:, body.axis] = rng.uniform(-body.half, body.half, n_cyl)
        if d == 2:
            cyl[:, others[0]] = body.radius * rng.choice([-1.0, 1.0], n_cyl)
        else:
            cyl[:, others] = body.radius * _sphere(rng, n_cyl, d - 1)
        return rng.permutation(np.vstack([caps, cyl]))
    if isinstance(body, Cube):
        X = rng.uniform(-body.half, body.half, (size, d))
        facet = rng.integers(0, d, size)
        sign = rng.choice([-1.0, 1.0], size)
        X[np.arange(size), facet] = sign * body.half
        return X
    raise TypeError(f"no boundary sampler for {type(body).__name__}")


def sample_boundary_points(body: Body, density: Density | None, size: int, rng: np.random.Generator) -> np.ndarray:
    """size i.i.d. boundary points with the given density (uniform if None), as a (size, d) array."""
    if density is None or density.is_uniform():
        return _uniform_points(body, size, rng)
    density.validate(body)
    M = density.sup_bound(body)
    out = np.empty((0, body.d))
    drawn = 0
    while len(out) < size:
        m = max(16, 2 * (size - len(out)))
        drawn += m
        if drawn > MAX_REJECTION_DRAWS * max(size, 1):
            raise EnvelopeError("density rejection loop did not terminate")
        X = _uniform_points(body, m, rng)
        f = density.unnormalized(body, X)
        bad = f > M * (1 + 1e-9)
        if np.any(bad):
            x = X[np.argmax(bad)]
            raise EnvelopeError(f"density exceeds its envelope {M} at {x}", point=x)
        out = np.vstack([out, X[rng.random(m) * M < f]])
    return out[:size]


def sample_boundary_uniform(body: Body, rng: np.random.Generator) -> BoundaryPoint:
    x = _uniform_points(body, 1, rng)[0]
    return BoundaryPoint(x, body.normal(x), body.principal_curvatures(x))


def sample_boundary(body: Body, density: Density | None, rng: np.random.Generator) -> BoundaryPoint:
    x = sample_boundary_points(body, density, 1, rng)[0]
    return BoundaryPoint(x, body.normal(x), body.principal_curvatures(x))


@dataclass(frozen=True)
class CloudSample:
    points: np.ndarray
    seed_trace: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.points.shape[0]


def sample_cloud(body: Body, density: Density | None, n: int, rng: np.random.Generator, seed_trace=()) -> CloudSample:
    """The vertex set x_1..x_n of the random polytope K_n."""
    if n < 1:
        raise ValueError("a cloud needs n >= 1 points")
    pts = sample_boundary_points(body, density, n, rng)
    pts.setflags(write=False)
    return CloudSample(pts, tuple(seed_trace))


def normalization_check(body: Body, density: Density, rng: np.random.Generator, m: int = 200_000):
    """Monte Carlo estimate of the total mass of the normalized density: (mean, stderr)."""
    X = _uniform_points(body, m, rng)
    vals = density.pdf(body, X) * body.surface_area
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(m))


# ---------------------------------------------------------------------------
# caps


def _stratified_uniform(body: Body, m: int, rng: np.random.Generator):
    """Uniform boundary sample split into strata of known area: list of (points, area)."""
    if isinstance(body, Capsule) and body.length > 0:
        p = body.cap_area / body.surface_area
        m_cap = max(2, int(round(m * p)))
        m_cyl = max(2, m - m_cap)
        caps = body.radius * _sphere(rng, m_cap, body.d)
        caps[:, body.axis] += body.half * np.sign(caps[:, body.axis])
        cyl = np.empty((m_cyl, body.d))
        others = [i for i in range(body.d) if i != body.axis]
        cyl[:, body.axis] = rng.uniform(-body.half, body.half, m_cyl)
        if body.d == 2:
            cyl[:, others[0]] = body.radius * rng.choice([-1.0, 1.0], m_cyl)
        else:
            cyl[:, others] = body.radius * _sphere(rng, m_cyl, body.d - 1)
        return [(caps, body.cap_area), (cyl, body.cylinder_area)]
    if isinstance(body, Cube):
        per = max(2, m // (2 * body.d))
        strata = []
        for i in range(body.d):
            for s in (-1.0, 1.0):
                X = rng.uniform(-body.half, body.half, (per, body.d))
                X[:, i] = s * body.half
                strata.append((X, body.side ** (body.d - 1)))
        return strata
    return [(_uniform_points(body, m, rng), body.surface_area)]


def _cap_level(body: Body, x: np.ndarray, t: float):
    u = body.normal(x)
    return u, (1.0 - t) * float(u @ x)


def _cap_mass_exact_ball(body: Ball, t: float) -> float:
    d = body.d
    # fraction of S^{d-1} with <v, w> >= 1 - t
    return 0.5 * float(betainc((d - 1) / 2.0, 0.5, 1.0 - (1.0 - t) ** 2))


def _cap_mass_quadrature(body: Body, density: Density, x, t: float, n: int = 64) -> float:
    d = body.d
    a = np.array(body.semiaxes) if isinstance(body, Ellipsoid) else np.full(d, body.radius)
    u, c = _cap_level(body, x, t)
    Au = a * u
    v = Au / np.linalg.norm(Au)
    tau = c / np.linalg.norm(Au)
    theta_max = math.acos(min(max(tau, -1.0), 1.0))
    z, wz = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * theta_max * (z + 1.0)
    wt = 0.5 * theta_max * wz * np.sin(theta) ** (d - 2)
    # orthonormal complement of v
    basis = np.linalg.svd(v[None, :])[2][1:]
    if d == 2:
        omegas = np.array([[1.0], [-1.0]])
        womega = np.array([1.0, 1.0])
    elif d == 3:
        m = 2 * n
        phi = 2 * np.pi * np.arange(m) / m
        omegas = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        womega = np.full(m, 2 * np.pi / m)
    else:
        rng = np.random.default_rng(7)
        omegas = _sphere(rng, 20_000, d - 1)
        womega = np.full(len(omegas), (d - 1) * alpha(d - 1) / len(omegas))
    W = np.cos(theta)[:, None, None] * v + np.sin(theta)[:, None, None] * (omegas @ basis)[None, :, :]
    jac = np.prod(a) * np.linalg.norm(W / a, axis=-1)
    f = density.pdf(body, W * a) * jac
    return float(np.einsum("i,j,ij->", wt, womega, f))


def cap_mass(body: Body, density: Density | None, x, t: float, *, method: str = "auto",
             samples: int = 10**6, rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Boundary probability mass s(t) of the cap C(x, t) = K ∩ {<u(x), z> >= (1-t) <u(x), x>}.

    Returns (value, stderr). Exact for the ball with uniform density,
    deterministic quadrature for balls and ellipsoids with other densities,
    stratified Monte Carlo otherwise (or when method="mc").
    """
    if not 0 < t < 1:
        raise ValueError(f"cap parameter t must lie in (0, 1), got {t}")
    density = Uniform() if density is None else density
    x = np.asarray(x, dtype=float)
    if method == "auto":
        if isinstance(body, Ball) and density.is_uniform():
            method = "exact"
        elif isinstance(body, (Ball, Ellipsoid)):
            method = "quadrature"
        else:
            method = "mc"
    if method == "exact":
        return _cap_mass_exact_ball(body, t), 0.0
    if method == "quadrature":
        coarse = _cap_mass_quadrature(body, density, x, t, n=48)
        fine = _cap_mass_quadrature(body, density, x, t, n=96)
        return fine, abs(fine - coarse)
    rng = np.random.default_rng(0) if rng is None else rng
    return cap_mass_mc(body, density, x, [t], samples, rng)[0]


def cap_mass_mc(body: Body, density: Density, x, t_grid, samples: int, rng: np.random.Generator):
    """Stratified Monte Carlo cap masses on a whole t grid with common random numbers."""
    u, _ = _cap_level(body, np.asarray(x, dtype=float), 0.0)
    h = float(u @ np.asarray(x, dtype=float))
    out = []
    strata = [(X, area, density.pdf(body, X), X @ u) for X, area in _stratified_uniform(body, samples, rng)]
    for t in t_grid:
        c = (1.0 - t) * h
        est, var = 0.0, 0.0
        for X, area, f, proj in strata:
            vals = area * f * (proj >= c)
            est += vals.mean()
            var += vals.var(ddof=1) / len(vals)
        out.append((float(est), float(math.sqrt(var))))
    return out
