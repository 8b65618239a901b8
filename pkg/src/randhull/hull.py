"""Geometry of the random polytope: convex-hull membership, hull measures, support values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import NumericalError

# relative stopping threshold of the min-norm-point iteration
_WOLFE_Z = 1e-12
_COEF_EPS = 1e-14


@dataclass(frozen=True)
class MembershipResult:
    """Verdict of a hull-membership query with a certificate.

    inside:       q lies in conv(points) up to the tolerance.
    distance:     Euclidean distance from q to the hull (0 up to tol when inside).
    coefficients: convex weights over all input points (inside only).
    direction:    unit vector a separating q from the hull (outside only).
    margin:       <a, q> - max_i <a, x_i>, strictly positive when outside.
    """

    inside: bool
    distance: float
    coefficients: np.ndarray | None = None
    direction: np.ndarray | None = None
    margin: float | None = None
    iterations: int = 0


def _affine_minimizer(Y: np.ndarray) -> np.ndarray:
    """Weights alpha with sum 1 minimizing ||alpha @ Y||."""
    k = Y.shape[0]
    if k == 1:
        return np.ones(1)
    A = np.empty((k + 1, k + 1))
    A[:k, :k] = Y @ Y.T
    A[:k, k] = 1.0
    A[k, :k] = 1.0
    A[k, k] = 0.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    try:
        sol = np.linalg.solve(A, b)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(A, b, rcond=None)[0]
    return sol[:k]


def _wolfe(X: np.ndarray, tol: float, max_iter: int):
    """Min-norm point of conv(rows of X).

    Returns (x, active indices, weights, iterations).
    """
    sq = np.einsum("ij,ij->i", X, X)
    scale = max(float(sq.max()), 1e-300)
    i0 = int(np.argmin(sq))
    S = [i0]
    lam = np.ones(1)
    x = X[i0].copy()
    for it in range(1, max_iter + 1):
        xx = float(x @ x)
        if xx <= tol * tol:
            return x, S, lam, it
        g = X @ x
        i = int(np.argmin(g))
        if xx - g[i] <= _WOLFE_Z * scale or i in S:
            return x, S, lam, it
        S.append(i)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimizer(X[S])
            if np.all(alpha > _COEF_EPS):
                lam = alpha
                break
            neg = (alpha <= _COEF_EPS) & (lam - alpha > 0)
            if not np.any(neg):
                lam = np.clip(alpha, 0.0, None)
                lam /= lam.sum()
                break
            theta = float(np.min(lam[neg] / (lam[neg] - alpha[neg])))
            lam = theta * alpha + (1.0 - theta) * lam
            keep = lam > _COEF_EPS
            if not keep.any():
                keep[np.argmax(lam)] = True
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep] / lam[keep].sum()
            if len(S) == 1:
                break
        x = lam @ X[S]
    raise NumericalError(
        f"min-norm-point iteration exceeded {max_iter} steps", residual=float(np.sqrt(x @ x))
    )


def in_hull(points, q, tol: float = 1e-9, max_iter: int = 10_000) -> MembershipResult:
    """Decide whether q lies in the convex hull of the given points.

    Uses Wolfe's minimum-norm-point iteration on the translated cloud
    {x_i - q}; the hull contains q iff the minimum norm is (numerically) zero.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if P.shape[0] == 0:
        raise ValueError("in_hull needs at least one point")
    if P.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: points in R^{P.shape[1]}, query in R^{q.shape[0]}")
    n = P.shape[0]
    X = P - q

    if P.shape[1] == 1:
        lo, hi = int(np.argmin(X[:, 0])), int(np.argmax(X[:, 0]))
        a_lo, a_hi = X[lo, 0], X[hi, 0]
        if a_lo - tol <= 0.0 <= a_hi + tol:
            coef = np.zeros(n)
            if a_hi - a_lo <= 0:
                coef[lo] = 1.0
            else:
                w = min(max(a_hi / (a_hi - a_lo), 0.0), 1.0)
                coef[lo] += w
                coef[hi] += 1.0 - w
            return MembershipResult(True, max(a_lo, -a_hi, 0.0), coefficients=coef, iterations=1)
        if a_lo > 0:
            return MembershipResult(
                False, float(a_lo), direction=np.array([-1.0]), margin=float(a_lo), iterations=1
            )
        return MembershipResult(
            False, float(-a_hi), direction=np.array([1.0]), margin=float(-a_hi), iterations=1
        )

    x, S, lam, iters = _wolfe(X, tol, max_iter)
    dist = float(np.sqrt(x @ x))
    if dist <= tol:
        coef = np.zeros(n)
        np.add.at(coef, S, lam)
        return MembershipResult(True, dist, coefficients=coef, iterations=iters)
    a = -x / dist
    margin = float(np.min(X @ x) / dist)
    return MembershipResult(False, dist, direction=a, margin=margin, iterations=iters)


def in_hull_many(points, queries, tol: float = 1e-9) -> np.ndarray:
    """Boolean membership for each row of queries against one cloud."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    out = np.zeros(Q.shape[0], dtype=bool)
    if Q.shape[0] == 0:
        return out
    # outside the coordinate bounding box: the coordinate axis separates
    lo, hi = P.min(axis=0), P.max(axis=0)
    candidate = np.all((Q >= lo - tol) & (Q <= hi + tol), axis=1)
    if P.shape[1] == 1:
        return candidate
    for k in np.flatnonzero(candidate):
        x, _, _, _ = _wolfe(P - Q[k], tol, 10_000)
        out[k] = float(x @ x) <= tol * tol
    return out


def cloud_support(points, u) -> np.ndarray | float:
    """max_i <x_i, u>; u may be a single direction or a stack of directions."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    U = np.asarray(u, dtype=float)
    vals = (P @ np.atleast_2d(U).T).max(axis=0)
    return float(vals[0]) if U.ndim == 1 else vals


def convex_hull_2d(points) -> np.ndarray:
    """Indices of hull vertices in counter-clockwise order (Andrew's monotone chain)."""
    P = np.asarray(points, dtype=float)
    order = np.lexsort((P[:, 1], P[:, 0]))
    if len(order) < 3:
        return order

    def cross(o, a, b):
        return (P[a, 0] - P[o, 0]) * (P[b, 1] - P[o, 1]) - (P[a, 1] - P[o, 1]) * (P[b, 0] - P[o, 0])

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in order[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(i)
    return np.array(lower[:-1] + upper[:-1], dtype=int)


def _shoelace(V: np.ndarray) -> float:
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def hull_measure_2d(points) -> float:
    """Area of the convex hull of planar points; 0 for degenerate input."""
    P = np.asarray(points, dtype=float)
    if P.shape[0] < 3:
        return 0.0
    idx = convex_hull_2d(P)
    if len(idx) < 3:
        return 0.0
    return abs(_shoelace(P[idx]))


def hull_perimeter_2d(points) -> float:
    P = np.asarray(points, dtype=float)
    if P.shape[0] == 1:
        return 0.0
    idx = convex_hull_2d(P)
    V = P[idx]
    if len(idx) == 2:
        return 2.0 * float(np.linalg.norm(V[1] - V[0]))
    return float(np.linalg.norm(V - np.roll(V, -1, axis=0), axis=1).sum())


def _planar_area_3d(P: np.ndarray) -> float:
    centered = P - P.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[1] <= 1e-12 * max(s[0], 1e-300):
        return 0.0
    return hull_measure_2d(centered @ vt[:2].T)


def hull_measure_3d(points) -> tuple[float, float]:
    """(volume, surface area) of the hull of points in R^3.

    Backed by Qhull. Coplanar input has volume 0 and surface area twice the
    planar hull area (both sides of a flat set).
    """
    P = np.asarray(points, dtype=float)
    if P.shape[0] < 4:
        raise ValueError("hull_measure_3d needs at least 4 points")
    try:
        hull = ConvexHull(P)
    except QhullError:
        return 0.0, 2.0 * _planar_area_3d(P)
    return float(hull.volume), float(hull.area)


@dataclass(frozen=True)
class Hull3D:
    points: np.ndarray
    faces: np.ndarray  # (m, 3) vertex indices, counter-clockwise seen from outside

    @property
    def vertices(self) -> np.ndarray:
        return np.unique(self.faces)

    def _corners(self):
        P = self.points
        return P[self.faces[:, 0]], P[self.faces[:, 1]], P[self.faces[:, 2]]

    @property
    def volume(self) -> float:
        a, b, c = self._corners()
        o = self.points[self.vertices].mean(axis=0)
        return float(np.einsum("ij,ij->i", a - o, np.cross(b - o, c - o)).sum() / 6.0)

    @property
    def area(self) -> float:
        a, b, c = self._corners()
        return float(np.linalg.norm(np.cross(b - a, c - a), axis=1).sum() / 2.0)

    def euler_characteristic(self) -> int:
        edges = set()
        for f in self.faces:
            for k in range(3):
                u, v = int(f[k]), int(f[(k + 1) % 3])
                edges.add((min(u, v), max(u, v)))
        return len(self.vertices) - len(edges) + len(self.faces)


def incremental_hull_3d(points, eps: float = 1e-10) -> Hull3D:
    """Beneath-beyond incremental convex hull in R^3 with oriented triangular facets.

    Raises NumericalError for (near-)coplanar input.
    """
    P = np.asarray(points, dtype=float)
    n = P.shape[0]
    if n < 4:
        raise ValueError("incremental_hull_3d needs at least 4 points")
    scale = float(np.abs(P - P.mean(axis=0)).max()) or 1.0
    tol = eps * scale

    i0 = int(np.argmin(P[:, 0]))
    i1 = int(np.argmax(np.linalg.norm(P - P[i0], axis=1)))
    line = P[i1] - P[i0]
    line_dist = np.linalg.norm(np.cross(P - P[i0], line), axis=1)
    i2 = int(np.argmax(line_dist))
    normal = np.cross(P[i1] - P[i0], P[i2] - P[i0])
    plane_dist = (P - P[i0]) @ normal
    i3 = int(np.argmax(np.abs(plane_dist)))
    if line_dist[i2] <= tol * np.linalg.norm(line) or abs(plane_dist[i3]) <= tol * np.linalg.norm(normal):
        raise NumericalError("degenerate (coplanar or collinear) point set")

    if plane_dist[i3] > 0:
        i1, i2 = i2, i1
    faces = [(i0, i1, i2), (i0, i3, i1), (i1, i3, i2), (i2, i3, i0)]

    def planes(F):
        F = np.asarray(F)
        a, b, c = P[F[:, 0]], P[F[:, 1]], P[F[:, 2]]
        nrm = np.cross(b - a, c - a)
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        return nrm, np.einsum("ij,ij->i", nrm, a)

    F = np.array(faces)
    normals, offsets = planes(F)
    used = {i0, i1, i2, i3}
    for p in range(n):
        if p in used:
            continue
        visible = normals @ P[p] - offsets > tol
        if not visible.any():
            continue
        vis_faces = F[visible]
        directed = set()
        for f in vis_faces:
            for k in range(3):
                directed.add((int(f[k]), int(f[(k + 1) % 3])))
        horizon = [(u, v) for (u, v) in directed if (v, u) not in directed]
        new = np.array([(u, v, p) for (u, v) in horizon])
        new_normals, new_offsets = planes(new)
        F = np.vstack([F[~visible], new])
        normals = np.vstack([normals[~visible], new_normals])
        offsets = np.concatenate([offsets[~visible], new_offsets])
        used.add(p)
    return Hull3D(P, F)
