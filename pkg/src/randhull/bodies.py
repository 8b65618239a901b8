"""Convex bodies with analytic support functions, normals and principal curvatures.

Four kinds are provided, all centered at the origin:

* ``Ball``      -- smooth with constant curvature.
* ``Ellipsoid`` -- smooth with strictly positive Gauss curvature.
* ``Capsule``   -- segment plus ball; has a rolling ball but zero Gauss
  curvature on its cylindrical part.
* ``Cube``      -- polytope, no rolling ball.

Array conventions: points and directions are ``(..., d)`` arrays and scalar
functionals broadcast over the leading axes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import ellipe

from .errors import BoundaryError, DimensionError, NoAnalyticValue, NumericalError
from .linalg import MAX_DIM, Frame


def alpha(j: int) -> float:
    """Volume of the j-dimensional unit ball."""
    if j < 0:
        raise ValueError("alpha(j) needs j >= 0")
    return math.pi ** (j / 2) / math.gamma(j / 2 + 1)


@dataclass(frozen=True)
class BoundaryPoint:
    x: np.ndarray
    u: np.ndarray
    k: np.ndarray | None  # principal curvatures, ascending; None where undefined


def curvature_functions(k) -> np.ndarray:
    """Normalized elementary symmetric functions H_0..H_{d-1} of principal curvatures.

    ``k`` is a BoundaryPoint or an array of shape (..., d-1).
    """
    if isinstance(k, BoundaryPoint):
        if k.k is None:
            raise BoundaryError("principal curvatures undefined at this point")
        k = k.k
    k = np.asarray(k, dtype=float)
    m = k.shape[-1]
    e = np.zeros(k.shape[:-1] + (m + 1,))
    e[..., 0] = 1.0
    for i in range(m):
        # e_r <- e_r + k_i e_{r-1}, descending r so each k_i is used once
        for r in range(i + 1, 0, -1):
            e[..., r] = e[..., r] + k[..., i] * e[..., r - 1]
    binoms = np.array([math.comb(m, r) for r in range(m + 1)], dtype=float)
    return e / binoms


# ---------------------------------------------------------------------------
# sphere quadrature


def sphere_quadrature(d: int, n: int, polar_axis: int = None, hemisphere: int = 0):
    """Nodes and weights on S^{d-1} (weights sum to the sphere's area).

    d=2 uses equispaced angles, d=3 a Gauss-Legendre x trapezoid product grid
    in (cos theta, phi). ``hemisphere`` = +1/-1 restricts to the half with
    positive/negative ``polar_axis`` coordinate, using a grid adapted to it.
    """
    polar_axis = d - 1 if polar_axis is None else polar_axis
    if d == 2:
        if hemisphere == 0:
            phi = 2 * np.pi * (np.arange(2 * n) + 0.5) / (2 * n)
            w = np.full(2 * n, np.pi / n)
        else:
            z, wz = np.polynomial.legendre.leggauss(2 * n)
            phi = np.pi / 2 * z
            w = wz * np.pi / 2
        # angle measured from the polar axis
        other = 1 - polar_axis
        U = np.empty((len(phi), 2))
        U[:, polar_axis] = np.cos(phi) * (hemisphere if hemisphere else 1)
        U[:, other] = np.sin(phi)
        return U, w
    if d == 3:
        z, wz = np.polynomial.legendre.leggauss(n)
        if hemisphere:
            z = 0.5 * (z + 1.0) * hemisphere
            wz = 0.5 * wz
        m = 2 * n
        phi = 2 * np.pi * np.arange(m) / m
        Z, PHI = np.meshgrid(z, phi, indexing="ij")
        rho = np.sqrt(np.clip(1 - Z**2, 0, None))
        others = [i for i in range(3) if i != polar_axis]
        U = np.empty(Z.shape + (3,))
        U[..., polar_axis] = Z
        U[..., others[0]] = rho * np.cos(PHI)
        U[..., others[1]] = rho * np.sin(PHI)
        W = np.broadcast_to(wz[:, None] * (2 * np.pi / m), Z.shape)
        return U.reshape(-1, 3), W.reshape(-1).copy()
    raise NoAnalyticValue(f"no deterministic sphere quadrature for d={d}")


def _mc_sphere(d: int, n: int, seed: int = 20240101, polar_axis=None, hemisphere=0):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, d))
    U = g / np.linalg.norm(g, axis=1, keepdims=True)
    area = d * alpha(d)
    if hemisphere:
        ax = d - 1 if polar_axis is None else polar_axis
        U[:, ax] = np.abs(U[:, ax]) * hemisphere
        area /= 2
    return U, np.full(n, area / n)


def _sphere_nodes(d, n, polar_axis=None, hemisphere=0):
    if d in (2, 3):
        return sphere_quadrature(d, n, polar_axis, hemisphere), False
    return _mc_sphere(d, max(n * n * 4, 200_000), polar_axis=polar_axis, hemisphere=hemisphere), True


@dataclass(frozen=True)
class Quadrature:
    """Boundary nodes with surface-measure weights.

    ``flat`` marks nodes on zero-Gauss-curvature parts; ``monte_carlo`` is set
    when the nodes are random rather than a deterministic rule.
    """

    points: np.ndarray
    weights: np.ndarray
    flat: np.ndarray
    monte_carlo: bool = False

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


# ---------------------------------------------------------------------------
# bodies


class Body:
    """Common interface; concrete bodies override the geometric primitives."""

    kind: str = "body"
    d: int

    def _check_d(self):
        if not 2 <= self.d <= MAX_DIM:
            raise DimensionError(f"ambient dimension must be in [2, {MAX_DIM}], got {self.d}")

    # -- primitives overridden by subclasses --
    def support(self, u):
        raise NotImplementedError

    def support_point(self, u):
        raise NotImplementedError

    def contains(self, p, tol: float = 1e-9):
        raise NotImplementedError

    def boundary_distance(self, x):
        raise NotImplementedError

    def normal(self, x):
        raise NotImplementedError

    def principal_curvatures(self, x):
        raise NotImplementedError

    def projected_contains(self, frame: Frame, y, tol: float = 1e-9):
        raise NotImplementedError

    def intrinsic_volume(self, j: int) -> float:
        raise NotImplementedError

    def boundary_quadrature(self, n: int = 64, flat_nodes: int = 0) -> Quadrature:
        raise NotImplementedError

    @property
    def rolling_radius(self) -> float | None:
        raise NotImplementedError

    @property
    def circumradius(self) -> float:
        raise NotImplementedError

    @property
    def surface_area(self) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    # -- shared --
    def _support_checked(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.d:
            raise DimensionError(f"direction has dimension {u.shape[-1]}, body lives in R^{self.d}")
        if np.any(np.linalg.norm(u, axis=-1) == 0):
            raise ValueError("support function needs a nonzero direction")
        return u

    def normal_and_curvatures(self, x, tol: float = 1e-9) -> BoundaryPoint:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionError(f"expected a point of R^{self.d}")
        dist = float(self.boundary_distance(x))
        if dist > tol:
            raise BoundaryError(f"point is {dist:.3e} away from the boundary")
        return BoundaryPoint(x=x, u=self.normal(x), k=self.principal_curvatures(x))

    def curvature_functions(self, x) -> np.ndarray:
        return curvature_functions(self.principal_curvatures(x))

    def gauss_curvature(self, x) -> np.ndarray:
        return np.prod(self.principal_curvatures(x), axis=-1)

    def frame_box(self, frame: Frame) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box in frame coordinates containing the projection K|L."""
        B = frame.columns.T
        return -self.support(-B), self.support(B)

    def describe(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params().items() if k not in ("kind",))
        return f"{type(self).__name__}({inner})"


@dataclass(frozen=True)
class Ball(Body):
    d: int
    radius: float = 1.0
    kind = "ball"

    def __post_init__(self):
        self._check_d()
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def support(self, u):
        u = self._support_checked(u)
        return self.radius * np.linalg.norm(u, axis=-1)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        return self.radius * u / np.linalg.norm(u, axis=-1, keepdims=True)

    def contains(self, p, tol=1e-9):
        return np.linalg.norm(np.asarray(p, dtype=float), axis=-1) <= self.radius + tol

    def boundary_distance(self, x):
        return np.abs(np.linalg.norm(np.asarray(x, dtype=float), axis=-1) - self.radius)

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def principal_curvatures(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] + (self.d - 1,), 1.0 / self.radius)

    def projected_contains(self, frame, y, tol=1e-9):
        return np.linalg.norm(np.asarray(y, dtype=float), axis=-1) <= self.radius + tol

    def intrinsic_volume(self, j):
        if not 0 <= j <= self.d:
            raise ValueError(f"order j must be in [0, {self.d}]")
        return math.comb(self.d, j) * alpha(self.d) / alpha(self.d - j) * self.radius**j

    def boundary_quadrature(self, n=64, flat_nodes=0):
        (U, w), mc = _sphere_nodes(self.d, n)
        return Quadrature(self.radius * U, w * self.radius ** (self.d - 1), np.zeros(len(w), bool), mc)

    @property
    def rolling_radius(self):
        return self.radius

    @property
    def circumradius(self):
        return self.radius

    @property
    def surface_area(self):
        return self.d * alpha(self.d) * self.radius ** (self.d - 1)

    def params(self):
        return {"kind": self.kind, "d": self.d, "radius": self.radius}


@dataclass(frozen=True)
class Ellipsoid(Body):
    semiaxes: tuple
    kind = "ellipsoid"

    def __post_init__(self):
        a = tuple(float(s) for s in self.semiaxes)
        object.__setattr__(self, "semiaxes", a)
        self._check_d()
        if min(a) <= 0:
            raise ValueError("semiaxes must be positive")

    @property
    def d(self):
        return len(self.semiaxes)

    @cached_property
    def _a(self):
        return np.array(self.semiaxes)

    def support(self, u):
        u = self._support_checked(u)
        return np.sqrt(np.sum((self._a * u) ** 2, axis=-1))

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        v = self._a**2 * u
        return v / np.sqrt(np.sum((self._a * u) ** 2, axis=-1, keepdims=True))

    def gauge(self, p):
        return np.sqrt(np.sum((np.asarray(p, dtype=float) / self._a) ** 2, axis=-1))

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        # first-order distance to the boundary: (gauge - 1) * |x| / gauge ~ (gauge-1) * scale
        g = self.gauge(p)
        return (g - 1.0) * self._a.min() <= tol

    def boundary_distance(self, x):
        return np.abs(self.gauge(x) - 1.0) * self._a.min()

    def normal(self, x):
        g = np.asarray(x, dtype=float) / self._a**2
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def principal_curvatures(self, x):
        x = np.asarray(x, dtype=float)
        qx = x / self._a**2
        nq = np.linalg.norm(qx, axis=-1)
        n = qx / nq[..., None]
        eye = np.eye(self.d)
        P = eye - n[..., :, None] * n[..., None, :]
        W = P @ np.diag(1.0 / self._a**2) @ P / nq[..., None, None]
        ev = np.linalg.eigvalsh(W)
        # the normal direction contributes the zero eigenvalue
        return ev[..., 1:]

    def gauss_curvature_closed_form(self, x):
        qx = np.asarray(x, dtype=float) / self._a**2
        return 1.0 / (np.prod(self._a**2) * np.linalg.norm(qx, axis=-1) ** (self.d + 1))

    def shadow_matrix(self, frame: Frame) -> np.ndarray:
        B = frame.columns
        return B.T @ (self._a[:, None] ** 2 * B)

    def projected_contains(self, frame, y, tol=1e-9):
        M = self.shadow_matrix(frame)
        y = np.asarray(y, dtype=float)
        if np.linalg.cond(M) > 1e12:
            raise NumericalError("singular shadow matrix")
        sol = np.linalg.solve(M, np.atleast_2d(y).T).T
        q = np.sqrt(np.maximum(np.sum(np.atleast_2d(y) * sol, axis=-1), 0.0))
        res = (q - 1.0) * self._a.min() <= tol
        return res if y.ndim > 1 else bool(res[0])

    def _surface_jacobian(self, U):
        return np.prod(self._a) * np.linalg.norm(U / self._a, axis=-1)

    def boundary_quadrature(self, n=64, flat_nodes=0):
        (U, w), mc = _sphere_nodes(self.d, n)
        return Quadrature(U * self._a, w * self._surface_jacobian(U), np.zeros(len(w), bool), mc)

    @cached_property
    def surface_area(self):
        if self.d == 2:
            a, b = max(self.semiaxes), min(self.semiaxes)
            return 4 * a * ellipe(1 - (b / a) ** 2)
        return float(self.boundary_quadrature(n=200).weights.sum())

    def intrinsic_volume(self, j):
        d = self.d
        if not 0 <= j <= d:
            raise ValueError(f"order j must be in [0, {d}]")
        if j == 0:
            return 1.0
        if j == d:
            return alpha(d) * float(np.prod(self._a))
        if d > 3:
            raise NoAnalyticValue(f"ellipsoid V_{j} in d={d} has no implemented ground truth")
        if j == d - 1:
            return self.surface_area / 2.0
        # d = 3, j = 1: mean width identity V_1 = (1/alpha_{d-1}) int_S h
        U, w = sphere_quadrature(3, 200)
        return float(np.dot(w, self.support(U))) / alpha(2)

    @property
    def rolling_radius(self):
        return min(self.semiaxes) ** 2 / max(self.semiaxes)

    @property
    def circumradius(self):
        return max(self.semiaxes)

    def params(self):
        return {"kind": self.kind, "d": self.d, "semiaxes": list(self.semiaxes)}


@dataclass(frozen=True)
class Capsule(Body):
    """Minkowski sum of the segment [-length/2, length/2] * e_axis and radius * B^d."""

    d: int
    radius: float = 1.0
    length: float = 1.0
    axis: int = 0
    kind = "capsule"

    def __post_init__(self):
        self._check_d()
        if self.radius <= 0 or self.length < 0:
            raise ValueError("capsule needs radius > 0 and length >= 0")
        if not 0 <= self.axis < self.d:
            raise DimensionError(f"axis index {self.axis} out of range for d={self.d}")

    @property
    def half(self):
        return self.length / 2.0

    def _axis_part(self, x):
        return np.clip(np.asarray(x, dtype=float)[..., self.axis], -self.half, self.half)

    def _offset(self, x):
        x = np.asarray(x, dtype=float)
        v = x.copy()
        v[..., self.axis] -= self._axis_part(x)
        return v

    def support(self, u):
        u = self._support_checked(u)
        return self.half * np.abs(u[..., self.axis]) + self.radius * np.linalg.norm(u, axis=-1)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        x = self.radius * u / np.linalg.norm(u, axis=-1, keepdims=True)
        x[..., self.axis] += self.half * np.sign(u[..., self.axis])
        return x

    def contains(self, p, tol=1e-9):
        return np.linalg.norm(self._offset(p), axis=-1) <= self.radius + tol

    def boundary_distance(self, x):
        return np.abs(np.linalg.norm(self._offset(x), axis=-1) - self.radius)

    def normal(self, x):
        v = self._offset(x)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def on_cylinder(self, x):
        return np.abs(np.asarray(x, dtype=float)[..., self.axis]) < self.half

    def principal_curvatures(self, x):
        x = np.asarray(x, dtype=float)
        k = np.full(x.shape[:-1] + (self.d - 1,), 1.0 / self.radius)
        k[..., 0] = np.where(self.on_cylinder(x), 0.0, 1.0 / self.radius)
        return k

    def projected_contains(self, frame, y, tol=1e-9):
        y_in = np.asarray(y, dtype=float)
        y = np.atleast_2d(y_in)
        e = frame.columns[self.axis] * self.half  # projected half-segment in frame coords
        ee = float(e @ e)
        if ee > 0:
            s = np.clip((y @ e) / ee, -1.0, 1.0)
            dist = np.linalg.norm(y - s[:, None] * e, axis=-1)
        else:
            dist = np.linalg.norm(y, axis=-1)
        res = dist <= self.radius + tol
        return res if y_in.ndim > 1 else bool(res[0])

    def intrinsic_volume(self, j):
        d, r = self.d, self.radius
        if not 0 <= j <= d:
            raise ValueError(f"order j must be in [0, {d}]")
        seg = [1.0, self.length]
        return sum(
            math.comb(d - k, d - j) * alpha(d - k) / alpha(d - j) * r ** (j - k) * seg[k]
            for k in range(min(j, 1) + 1)
        )

    @property
    def cap_area(self):
        return self.d * alpha(self.d) * self.radius ** (self.d - 1)

    @property
    def cylinder_area(self):
        return self.length * (self.d - 1) * alpha(self.d - 1) * self.radius ** (self.d - 2)

    @property
    def surface_area(self):
        return self.cap_area + self.cylinder_area

    def boundary_quadrature(self, n=64, flat_nodes=0):
        pts, wts, flat = [], [], []
        mc = False
        for sgn in (1, -1):
            (U, w), mc = _sphere_nodes(self.d, n, polar_axis=self.axis, hemisphere=sgn)
            X = self.radius * U
            X[:, self.axis] += sgn * self.half
            pts.append(X)
            wts.append(w * self.radius ** (self.d - 1))
            flat.append(np.zeros(len(w), bool))
        if flat_nodes > 0 and self.length > 0:
            z, wz = np.polynomial.legendre.leggauss(flat_nodes)
            z, wz = z * self.half, wz * self.half
            if self.d == 2:
                V, wv = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
            else:
                (V, wv), _ = _sphere_nodes(self.d - 1, flat_nodes)
            others = [i for i in range(self.d) if i != self.axis]
            X = np.zeros((len(z), len(wv), self.d))
            X[..., self.axis] = z[:, None]
            X[..., others] = self.radius * V[None, :, :]
            W = wz[:, None] * wv[None, :] * self.radius ** (self.d - 2)
            pts.append(X.reshape(-1, self.d))
            wts.append(W.reshape(-1))
            flat.append(np.ones(W.size, bool))
        return Quadrature(np.vstack(pts), np.concatenate(wts), np.concatenate(flat), mc)

    @property
    def rolling_radius(self):
        return self.radius

    @property
    def circumradius(self):
        return self.half + self.radius

    def params(self):
        return {"kind": self.kind, "d": self.d, "radius": self.radius, "length": self.length, "axis": self.axis}


@dataclass(frozen=True)
class Cube(Body):
    """Axis-aligned cube [-side/2, side/2]^d."""

    d: int
    side: float = 1.0
    kind = "cube"

    def __post_init__(self):
        self._check_d()
        if self.side <= 0:
            raise ValueError("side must be positive")

    @property
    def half(self):
        return self.side / 2.0

    @cached_property
    def vertices(self) -> np.ndarray:
        return self.half * np.array(list(itertools.product((-1.0, 1.0), repeat=self.d)))

    def support(self, u):
        u = self._support_checked(u)
        return self.half * np.sum(np.abs(u), axis=-1)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        return self.half * np.where(u >= 0, 1.0, -1.0)

    def contains(self, p, tol=1e-9):
        return np.max(np.abs(np.asarray(p, dtype=float)), axis=-1) <= self.half + tol

    def boundary_distance(self, x):
        return np.abs(np.max(np.abs(np.asarray(x, dtype=float)), axis=-1) - self.half)

    def facet_index(self, x, tol=1e-9):
        """Index i and sign s of the facet {x_i = s * side/2} containing x in its relative interior."""
        x = np.asarray(x, dtype=float)
        on = np.abs(np.abs(x) - self.half) <= tol
        if np.any(on.sum(axis=-1) != 1):
            raise BoundaryError("point is on an edge or vertex of the cube (normal undefined)")
        i = np.argmax(on, axis=-1)
        s = np.sign(np.take_along_axis(x, np.asarray(i)[..., None], axis=-1))[..., 0]
        return i, s

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        i, s = self.facet_index(x, tol=1e-9 * max(1.0, self.side))
        u = np.zeros(x.shape)
        np.put_along_axis(u, np.asarray(i)[..., None], np.asarray(s)[..., None], axis=-1)
        return u

    def principal_curvatures(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (self.d - 1,))

    def projected_contains(self, frame, y, tol=1e-9):
        from .hull import in_hull, in_hull_many

        shadow = self.vertices @ frame.columns
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return in_hull(shadow, y, tol=tol).inside
        if frame.j == 1:
            return (y[:, 0] >= shadow.min() - tol) & (y[:, 0] <= shadow.max() + tol)
        if len(y) > 64:
            # many queries: facet inequalities of the shadow polytope, built once
            eq = ConvexHull(shadow).equations
            return np.all(y @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)
        return in_hull_many(shadow, y, tol=tol)

    def intrinsic_volume(self, j):
        if not 0 <= j <= self.d:
            raise ValueError(f"order j must be in [0, {self.d}]")
        return math.comb(self.d, j) * self.side**j

    def boundary_quadrature(self, n=16, flat_nodes=0):
        m = self.d - 1
        z, wz = np.polynomial.legendre.leggauss(n)
        z, wz = z * self.half, wz * self.half
        grid = np.array(list(itertools.product(z, repeat=m)))
        gw = np.prod(np.array(list(itertools.product(wz, repeat=m))), axis=1)
        pts, wts = [], []
        for i in range(self.d):
            for s in (-1.0, 1.0):
                X = np.insert(grid, i, s * self.half, axis=1)
                pts.append(X)
                wts.append(gw)
        W = np.concatenate(wts)
        return Quadrature(np.vstack(pts), W, np.ones(len(W), bool))

    @property
    def rolling_radius(self):
        return None

    @property
    def circumradius(self):
        return self.half * math.sqrt(self.d)

    @property
    def surface_area(self):
        return 2 * self.d * self.side ** (self.d - 1)

    def params(self):
        return {"kind": self.kind, "d": self.d, "side": self.side}


BODY_KINDS = {"ball": Ball, "ellipsoid": Ellipsoid, "capsule": Capsule, "cube": Cube}


def body_from_params(params: dict) -> Body:
    """Build a body from a kind + parameter mapping (as found in experiment configs)."""
    params = dict(params)
    kind = params.pop("kind", None)
    if kind not in BODY_KINDS:
        raise ValueError(f"unknown body kind {kind!r}; expected one of {sorted(BODY_KINDS)}")
    if kind == "ellipsoid":
        d = params.pop("d", None)
        axes = params.pop("semiaxes")
        if d is not None and d != len(axes):
            raise DimensionError(f"ellipsoid d={d} but {len(axes)} semiaxes given")
        if params:
            raise ValueError(f"unknown ellipsoid parameters {sorted(params)}")
        return Ellipsoid(tuple(axes))
    return BODY_KINDS[kind](**params)


def intrinsic_volume_analytic(body: Body, j: int) -> float:
    return body.intrinsic_volume(j)


def rolling_radius(body: Body) -> float | None:
    return body.rolling_radius
