import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from randhull.bodies import Ball, Capsule, Cube, Ellipsoid, alpha
from randhull.errors import CalibrationMissing, HypothesisViolation
from randhull.functionals import (QuadSpec, ball_limit_integral, curvature_weighted_integral, density_functional,
                                  kubota_coefficient, kubota_estimate, limit_integral, predicted_deficit,
                                  projected_boundary_integral, schuett_werner_constant)
from randhull.sampling import CurvaturePower, Uniform


def test_volume_constant_examples():
    assert schuett_werner_constant(2) == pytest.approx(0.5)
    assert schuett_werner_constant(3) == pytest.approx(1 / math.pi)
    for d in range(2, 7):
        c = schuett_werner_constant(d)
        assert 0 < c < math.inf


def test_volume_constant_independent_evaluation():
    # direct transcription with gamma-function unit-ball volumes
    for d in range(2, 8):
        a = math.pi ** ((d - 1) / 2) / math.gamma((d + 1) / 2)
        ref = ((d - 1) ** ((d + 1) / (d - 1)) * math.gamma(d + 1 + 2 / (d - 1))
               / (2 * math.factorial(d + 1) * ((d - 1) * a) ** (2 / (d - 1))))
        assert schuett_werner_constant(d) == pytest.approx(ref, rel=1e-14)


@pytest.mark.parametrize("body,j,exact", [
    (Ball(3), 1, 4.0),
    (Cube(3), 1, 3.0),
    (Ball(3), 2, 2 * math.pi),
])
def test_kubota_examples(body, j, exact):
    est = kubota_estimate(body, j, 400, 4000, np.random.default_rng(0))
    assert est.mean == pytest.approx(exact, rel=0.01)


def test_kubota_consistency_on_ellipsoid():
    e = Ellipsoid((2.0, 1.0, 1.5))
    for j in (1, 2):
        est = kubota_estimate(e, j, 400, 4000, np.random.default_rng(j))
        assert abs(est.mean - e.intrinsic_volume(j)) < 3 * est.stderr


def test_kubota_coefficient_reproduces_ball():
    # every shadow of the unit ball is a unit j-ball
    for d in range(2, 7):
        for j in range(1, d):
            assert kubota_coefficient(d, j) * alpha(j) == pytest.approx(Ball(d).intrinsic_volume(j))


@pytest.mark.parametrize("d", [2, 3])
def test_ball_limit_integral_every_order(d):
    for j in range(1, d + 1):
        li = limit_integral(Ball(d), Uniform(), j)
        assert li.value == pytest.approx(ball_limit_integral(d, j), rel=1e-10)
    assert ball_limit_integral(3, 3) == pytest.approx(16 * math.pi**2)
    assert ball_limit_integral(2, 2) == pytest.approx(8 * math.pi**3)


def test_capsule_caps_only():
    body = Capsule(3, 1.0, 2.0)
    coarse = limit_integral(body, Uniform(), 3, QuadSpec(64, 0)).value
    fine = limit_integral(body, Uniform(), 3, QuadSpec(96, 256)).value
    assert coarse == pytest.approx(32 * math.pi**2, rel=1e-10)
    assert fine == pytest.approx(coarse, rel=1e-12)


def test_degenerate_ellipse_is_the_disc():
    li = limit_integral(Ellipsoid((1.0, 1.0)), Uniform(), 2)
    assert li.value == pytest.approx(8 * math.pi**3, rel=1e-10)


def test_ellipse_limit_integral_against_parametric_quadrature():
    # area law for the ellipse, uniform density: rho = 1/L, integrand (1/L)^{-2} * k * H_0 ds
    a, b = 2.0, 1.0
    e = Ellipsoid((a, b))
    speed = lambda t: math.sqrt(a**2 * math.sin(t) ** 2 + b**2 * math.cos(t) ** 2)  # noqa: E731
    curv = lambda t: a * b / speed(t) ** 3  # noqa: E731
    L = integrate.quad(speed, 0, 2 * math.pi)[0]
    ref = L**2 * integrate.quad(lambda t: curv(t) * speed(t), 0, 2 * math.pi, epsabs=1e-13)[0]
    assert ref == pytest.approx(2 * math.pi * L**2)
    assert limit_integral(e, Uniform(), 2).value == pytest.approx(ref, rel=1e-8)


def test_cube_refused():
    with pytest.raises(HypothesisViolation, match="no rolling ball"):
        limit_integral(Cube(3), Uniform(), 3)


def test_predictions():
    assert predicted_deficit(Ball(2), Uniform(), 2, 100) == pytest.approx(4 * math.pi**3 / 100**2)
    assert predicted_deficit(Ball(3), Uniform(), 3, 1000) == pytest.approx(16 * math.pi / 1000)
    assert predicted_deficit(Capsule(3, 1.0, 2.0), Uniform(), 3, 1000) == pytest.approx(32 * math.pi / 1000)
    with pytest.raises(CalibrationMissing):
        predicted_deficit(Ball(3), Uniform(), 1, 100)
    assert predicted_deficit(Ball(3), Uniform(), 1, 100, c=0.2) > 0


@given(st.integers(10, 10**6))
def test_prediction_scales_as_power_law(n):
    e = Ellipsoid((2.0, 1.0, 1.5))
    p1 = predicted_deficit(e, Uniform(), 3, n)
    p4 = predicted_deficit(e, Uniform(), 3, 4 * n)
    assert p4 / p1 == pytest.approx(4.0 ** -1.0, rel=1e-12)
    assert p4 < p1


def test_density_functional_on_ball_is_flat():
    vals = [density_functional(Ball(2), beta, 2) for beta in (0.0, 0.2, 1 / 3, 0.8)]
    assert np.allclose(vals, vals[0], rtol=1e-10)


def test_density_functional_minimized_at_one_third():
    e = Ellipsoid((2.0, 1.0))
    opt = density_functional(e, 1 / 3, 2)
    for beta in (0.0, 0.2, 0.5, 0.8):
        assert opt <= density_functional(e, beta, 2)
    # fine sweep: the minimizer sits at 1/3
    betas = np.linspace(0.2, 0.5, 31)
    vals = [density_functional(e, b, 2) for b in betas]
    assert betas[int(np.argmin(vals))] == pytest.approx(1 / 3, abs=0.011)


def test_density_functional_zero_is_uniform():
    e = Ellipsoid((2.0, 1.0, 1.5))
    assert density_functional(e, 0.0, 3) == pytest.approx(limit_integral(e, Uniform(), 3).value, rel=1e-12)
    assert limit_integral(e, CurvaturePower(0.0), 2).value == pytest.approx(limit_integral(e, Uniform(), 2).value)


@pytest.mark.parametrize("body", [Ball(3), Ellipsoid((2.0, 1.0, 1.5))])
@pytest.mark.parametrize("j", [1, 2])
@pytest.mark.parametrize("fname", ["one", "x1sq"])
def test_integral_geometric_identity(body, j, fname):
    f = {"one": lambda X: np.ones(len(X)), "x1sq": lambda X: X[:, 0] ** 2}[fname]
    lhs = curvature_weighted_integral(body, f, j)
    rhs = projected_boundary_integral(body, f, j, 2000, np.random.default_rng(j))
    # the shadow outline is integrated with a 4096-chord polygon: allow its O(1e-7) bias
    assert abs(lhs - rhs.mean) <= 3 * rhs.stderr + 1e-6 * abs(lhs)
