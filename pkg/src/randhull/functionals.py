"""Deterministic functionals: unit-ball constants, the explicit volume constant,
Kubota averages, the curvature integral of the asymptotic law and the
optimal-density functional."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import Body, Cube, Quadrature, alpha
from .errors import CalibrationMissing, HypothesisViolation
from .linalg import Frame, random_subspace
from .results import Estimate
from .sampling import CurvaturePower, Density, Uniform

__all__ = [
    "alpha",
    "schuett_werner_constant",
    "kubota_coefficient",
    "kubota_estimate",
    "QuadSpec",
    "LimitIntegral",
    "limit_integral",
    "predicted_deficit",
    "density_functional",
    "curvature_weighted_integral",
    "projected_boundary_integral",
    "ball_limit_integral",
]


def schuett_werner_constant(d: int) -> float:
    """Closed-form constant of the volume law (j = d)."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return (
        (d - 1) ** ((d + 1) / (d - 1))
        * math.gamma(d + 1 + 2 / (d - 1))
        / (2 * math.factorial(d + 1) * ((d - 1) * alpha(d - 1)) ** (2 / (d - 1)))
    )


def kubota_coefficient(d: int, j: int) -> float:
    return math.comb(d, j) * alpha(d) / (alpha(j) * alpha(d - j))


def projection_volume(body: Body, frame: Frame, samples: int, rng: np.random.Generator) -> float:
    """Hit-or-miss estimate of the j-volume of the shadow K|L inside its support box."""
    lo, hi = body.frame_box(frame)
    Y = rng.uniform(lo, hi, (samples, frame.j))
    inside = np.asarray(body.projected_contains(frame, Y), dtype=bool)
    return float(np.prod(hi - lo) * inside.mean())


def kubota_estimate(body: Body, j: int, num_subspaces: int, samples_per_subspace: int,
                    rng: np.random.Generator) -> Estimate:
    """V_j(K) as a normalized average of shadow volumes over Haar-random j-subspaces."""
    d = body.d
    if not 1 <= j <= d - 1:
        raise ValueError(f"Kubota averaging needs 1 <= j <= d-1, got j={j}")
    coef = kubota_coefficient(d, j)
    vols = [projection_volume(body, random_subspace(d, j, rng), samples_per_subspace, rng)
            for _ in range(num_subspaces)]
    return Estimate.from_samples(vols, route="kubota").scaled(coef)


@dataclass(frozen=True)
class QuadSpec:
    nodes: int = 96
    flat_nodes: int = 0


@dataclass(frozen=True)
class LimitIntegral:
    value: float
    stderr: float
    j: int
    body: str
    density: str


def _limit_integrand(body: Body, density: Density, j: int, quad: Quadrature) -> np.ndarray:
    d = body.d
    X = quad.points
    H = body.curvature_functions(X)
    gauss = np.clip(H[:, d - 1], 0.0, None)
    rho = density.pdf(body, X)
    return rho ** (-2.0 / (d - 1)) * gauss ** (1.0 / (d - 1)) * H[:, d - j]


def _check_rolling_ball(body: Body):
    if isinstance(body, Cube) or body.rolling_radius is None:
        raise HypothesisViolation(
            "no rolling ball: the asymptotic deficit law does not apply to this body; "
            "only the mean-width order bounds hold"
        )


def limit_integral(body: Body, density: Density | None, j: int, quad_spec: QuadSpec | None = None) -> LimitIntegral:
    """Integral over the boundary of rho^{-2/(d-1)} H_{d-1}^{1/(d-1)} H_{d-j}.

    Parts of the boundary with zero Gauss curvature contribute nothing and are
    only visited when ``quad_spec.flat_nodes`` is positive.
    """
    _check_rolling_ball(body)
    d = body.d
    if not 1 <= j <= d:
        raise ValueError(f"order j must be in [1, {d}]")
    density = Uniform() if density is None else density
    density.validate(body)
    spec = QuadSpec() if quad_spec is None else quad_spec

    quad = body.boundary_quadrature(spec.nodes, spec.flat_nodes)
    f = _limit_integrand(body, density, j, quad)
    value = quad.integrate(f)
    if quad.monte_carlo:
        stderr = float(np.sqrt(np.sum(quad.weights**2)) * f.std(ddof=1))
    else:
        coarse_q = body.boundary_quadrature(max(spec.nodes // 2, 4), spec.flat_nodes // 2)
        coarse = coarse_q.integrate(_limit_integrand(body, density, j, coarse_q))
        stderr = abs(value - coarse)
    return LimitIntegral(value, stderr, j, body.describe(), density.kind)


def ball_limit_integral(d: int, j: int, radius: float = 1.0) -> float:
    """Closed form of the curvature integral for a ball with uniform density."""
    return (d * alpha(d)) ** ((d + 1) / (d - 1)) * radius**j


def predicted_deficit(body: Body, density: Density | None, j: int, n, c: float | None = None,
                      quad_spec: QuadSpec | None = None) -> float | np.ndarray:
    """c^{(j,d)} * I_j * n^{-2/(d-1)}.

    ``c`` defaults to the explicit constant for j = d; other orders need a
    calibrated constant.
    """
    d = body.d
    if c is None:
        if j != d:
            raise CalibrationMissing(f"no calibrated constant for (j={j}, d={d})")
        c = schuett_werner_constant(d)
    integral = limit_integral(body, density, j, quad_spec).value
    return c * integral * np.asarray(n, dtype=float) ** (-2.0 / (d - 1))


def density_functional(body: Body, beta: float, j: int, quad_spec: QuadSpec | None = None) -> float:
    """Curvature integral evaluated at the normalized curvature-power density with exponent beta."""
    return limit_integral(body, CurvaturePower(beta), j, quad_spec).value


def curvature_weighted_integral(body: Body, f, j: int, nodes: int = 96, flat_nodes: int = 96) -> float:
    """(j alpha_j / (d alpha_d)) * integral over the boundary of f * H_{d-j}."""
    d = body.d
    quad = body.boundary_quadrature(nodes, flat_nodes)
    H = body.curvature_functions(quad.points)
    return j * alpha(j) / (d * alpha(d)) * quad.integrate(f(quad.points) * H[:, d - j])


def _shadow_boundary_integral(body: Body, frame: Frame, f, nodes: int) -> float:
    """Integral of f(x(y)) over the relative boundary of K|L, y = x(y)|L, for j in {1, 2}."""
    B = frame.columns
    if frame.j == 1:
        b = B[:, 0]
        return float(f(body.support_point(b)[None])[0] + f(body.support_point(-b)[None])[0])
    if frame.j == 2:
        phi = 2 * np.pi * np.arange(nodes + 1) / nodes
        U = np.cos(phi)[:, None] * B[:, 0] + np.sin(phi)[:, None] * B[:, 1]
        X = body.support_point(U)
        Y = X @ B
        chords = np.linalg.norm(np.diff(Y, axis=0), axis=1)
        mid = 0.5 * (phi[:-1] + phi[1:])
        Um = np.cos(mid)[:, None] * B[:, 0] + np.sin(mid)[:, None] * B[:, 1]
        return float(np.dot(f(body.support_point(Um)), chords))
    raise NotImplementedError("shadow boundary integrals are implemented for j = 1 and j = 2")


def projected_boundary_integral(body: Body, f, j: int, num_subspaces: int, rng: np.random.Generator,
                                nodes: int = 4096) -> Estimate:
    """Haar average over j-subspaces L of the integral of f(x(y)) over the boundary of K|L."""
    vals = [_shadow_boundary_integral(body, random_subspace(body.d, j, rng), f, nodes)
            for _ in range(num_subspaces)]
    return Estimate.from_samples(vals, route="integral-geometric")
