import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from oracles import brute_force_hull_facets, lp_in_hull
from randhull.hull import (cloud_support, convex_hull_2d, hull_measure_2d, hull_measure_3d, hull_perimeter_2d,
                           in_hull, in_hull_many, incremental_hull_3d)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_square_center_inside_with_certificate():
    res = in_hull(SQUARE, [0.5, 0.5])
    assert res.inside
    assert res.coefficients.sum() == pytest.approx(1.0)
    assert np.all(res.coefficients >= 0)
    assert res.coefficients @ SQUARE == pytest.approx([0.5, 0.5])


def test_outside_point_gets_separating_direction():
    res = in_hull(SQUARE, [1.5, 0.5])
    assert not res.inside
    assert res.direction == pytest.approx([1.0, 0.0])
    assert res.margin == pytest.approx(0.5)
    assert res.distance == pytest.approx(0.5)


def test_vertex_and_edge_points_are_inside():
    assert in_hull(SQUARE, [1.0, 1.0]).inside
    assert in_hull(SQUARE, [0.5, 0.0]).inside


def test_one_dimensional_fast_path():
    P = np.array([[0.0], [2.0], [1.0]])
    assert in_hull(P, [1.5]).inside
    res = in_hull(P, [3.0])
    assert not res.inside and res.margin == pytest.approx(1.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        in_hull(SQUARE, [0.0, 0.0, 0.0])


@st.composite
def clouds(draw):
    d = draw(st.integers(2, 5))
    m = draw(st.integers(1, 30))
    seed = draw(st.integers(0, 2**32))
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((m, d))
    q = rng.standard_normal(d) * rng.uniform(0.1, 2.0)
    return P, q


@given(clouds())
def test_certificates_are_valid(case):
    P, q = case
    res = in_hull(P, q)
    if res.inside:
        lam = res.coefficients
        assert np.all(lam >= -1e-12)
        assert lam.sum() == pytest.approx(1.0)
        assert np.linalg.norm(lam @ P - q) <= 1e-7
    else:
        a = res.direction
        assert np.linalg.norm(a) == pytest.approx(1.0)
        assert a @ q - (P @ a).max() == pytest.approx(res.margin, abs=1e-9)
        assert res.margin > 0


@given(clouds())
def test_agrees_with_lp_oracle(case):
    P, q = case
    res = in_hull(P, q)
    if res.distance < 1e-6 and not res.inside:
        return  # a near-tie: either answer is within tolerance
    assert res.inside == lp_in_hull(P, q)


@given(clouds())
def test_affine_invariance(case):
    P, q = case
    rng = np.random.default_rng(int(abs(q[0]) * 1e6))
    d = P.shape[1]
    A = rng.standard_normal((d, d)) + 3 * np.eye(d)
    b = rng.standard_normal(d)
    r1 = in_hull(P, q)
    r2 = in_hull(P @ A.T + b, A @ q + b)
    if min(r1.distance, r2.distance) > 1e-6 or (r1.inside and r2.inside):
        assert r1.inside == r2.inside


def test_many_matches_single():
    rng = np.random.default_rng(5)
    P = rng.standard_normal((40, 3))
    Q = rng.standard_normal((200, 3))
    many = in_hull_many(P, Q)
    assert list(many) == [in_hull(P, q).inside for q in Q]


def test_monotone_chain_matches_qhull():
    rng = np.random.default_rng(6)
    for m in (3, 10, 100, 1000):
        P = rng.standard_normal((m, 2))
        idx = convex_hull_2d(P)
        assert set(idx) == set(ConvexHull(P).vertices)
        assert hull_measure_2d(P) == pytest.approx(ConvexHull(P).volume, rel=1e-12)
        assert hull_perimeter_2d(P) == pytest.approx(ConvexHull(P).area, rel=1e-12)


def test_monotone_chain_is_counter_clockwise_with_collinear_points():
    P = np.array([[0, 0], [1, 0], [2, 0], [2, 2], [0, 2], [1, 1]], dtype=float)
    idx = convex_hull_2d(P)
    assert hull_measure_2d(P) == pytest.approx(4.0)
    V = P[idx]
    e1 = np.roll(V, -1, axis=0) - V
    e2 = np.roll(V, -2, axis=0) - np.roll(V, -1, axis=0)
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert np.all(cross > 0)


def test_regular_polygon_area():
    n = 12
    phi = 2 * np.pi * np.arange(n) / n
    P = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    assert hull_measure_2d(P) == pytest.approx(0.5 * n * math.sin(2 * math.pi / n))


def test_cube_corners():
    C = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    vol, area = hull_measure_3d(C)
    assert vol == pytest.approx(1.0) and area == pytest.approx(6.0)
    H = incremental_hull_3d(C)
    assert H.volume == pytest.approx(1.0) and H.area == pytest.approx(6.0)


def test_flat_cloud_has_zero_volume():
    P = np.random.default_rng(0).standard_normal((20, 3))
    P[:, 2] = 0.0
    vol, area = hull_measure_3d(P)
    assert vol == 0.0
    assert area == pytest.approx(2 * ConvexHull(P[:, :2]).volume)


@given(st.integers(4, 60), st.integers(0, 2**32))
def test_incremental_hull_matches_qhull(m, seed):
    P = np.random.default_rng(seed).standard_normal((m, 3))
    H = incremental_hull_3d(P)
    ref = ConvexHull(P)
    assert H.volume == pytest.approx(ref.volume, rel=1e-9)
    assert H.area == pytest.approx(ref.area, rel=1e-9)
    assert set(map(int, H.vertices)) == set(ref.vertices)
    assert H.euler_characteristic() == 2


def test_incremental_hull_matches_brute_force_facets():
    P = np.random.default_rng(7).standard_normal((12, 3))
    H = incremental_hull_3d(P)
    planes = brute_force_hull_facets(P)
    # every brute-force supporting plane touches the hull vertices only
    for nrm, off in planes:
        assert np.max(P @ nrm) == pytest.approx(off, abs=1e-9)
    assert len(H.faces) == len({tuple(np.round(n, 9)) for n, _ in planes})


def test_cloud_support():
    assert cloud_support(SQUARE, np.array([1.0, 1.0])) == pytest.approx(2.0)
    U = np.array([[1.0, 0.0], [0.0, -1.0]])
    assert cloud_support(SQUARE, U) == pytest.approx([1.0, 0.0])
