import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randhull.errors import DimensionError
from randhull.linalg import (Frame, SeedSpec, derive_stream, map_replicates, project, random_rotation,
                             random_subspace, random_unit_vector)

dims = st.integers(2, 10)


@given(d=dims, seed=st.integers(0, 2**32))
def test_subspace_is_orthonormal(d, seed):
    rng = np.random.default_rng(seed)
    j = int(rng.integers(1, d + 1))
    F = random_subspace(d, j, rng)
    assert F.columns.shape == (d, j)
    assert F.orthonormality_residual() < 1e-12


@given(d=dims, seed=st.integers(0, 2**32))
def test_projector_is_idempotent_and_symmetric(d, seed):
    rng = np.random.default_rng(seed)
    F = random_subspace(d, int(rng.integers(1, d + 1)), rng)
    P = F.projector()
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.isclose(np.trace(P), F.j)


def test_frame_is_read_only():
    F = Frame.standard(3, 2)
    with pytest.raises(ValueError):
        F.columns[0, 0] = 5.0


def test_bad_dimensions_rejected():
    with pytest.raises(DimensionError):
        random_subspace(11, 2, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        random_unit_vector(1, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        Frame(np.zeros((2, 3)))


def test_haar_mean_projector():
    # E[P_L] = (j/d) I for a Haar-random j-subspace
    rng = np.random.default_rng(1)
    d, j, m = 4, 2, 20000
    acc = sum(random_subspace(d, j, rng).projector() for _ in range(m)) / m
    assert np.abs(acc - j / d * np.eye(d)).max() < 6 * 0.5 / np.sqrt(m)


def test_haar_first_coordinate_distribution():
    # for L a uniform line in R^3, <e1, b>^2 is Beta(1/2, 1); its mean is 1/3
    from scipy import stats

    rng = np.random.default_rng(2)
    vals = np.array([random_subspace(3, 1, rng).columns[0, 0] ** 2 for _ in range(5000)])
    assert stats.kstest(vals, stats.beta(0.5, 1.0).cdf).pvalue > 1e-3


def test_unit_vectors_uniform_on_circle():
    from scipy import stats

    U = random_unit_vector(2, np.random.default_rng(3), size=20000)
    assert np.allclose(np.linalg.norm(U, axis=1), 1.0)
    angle = (np.arctan2(U[:, 1], U[:, 0]) + np.pi) / (2 * np.pi)
    assert stats.kstest(angle, "uniform").pvalue > 1e-3


@given(d=dims, seed=st.integers(0, 2**32))
def test_rotation_is_special_orthogonal(d, seed):
    R = random_rotation(d, np.random.default_rng(seed))
    assert np.allclose(R @ R.T, np.eye(d), atol=1e-12)
    assert np.isclose(np.linalg.det(R), 1.0)


def test_project_example():
    F = Frame(np.array([[1.0], [0.0], [0.0]]))
    assert project(np.array([1.0, 2.0, 3.0]), F) == pytest.approx([1.0])
    X = np.arange(6.0).reshape(2, 3)
    assert project(X, Frame.standard(3, 2)).shape == (2, 2)


def test_streams_are_deterministic_and_distinct():
    s = SeedSpec(42, 3)
    a = derive_stream(s, 7).random(5)
    b = derive_stream(s, 7).random(5)
    c = derive_stream(s, 8).random(5)
    d = derive_stream(SeedSpec(42, 4), 7).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_map_replicates_independent_of_threads():
    fn = lambda rng: float(rng.standard_normal())  # noqa: E731
    one = map_replicates(fn, SeedSpec(9), 50, threads=1)
    four = map_replicates(fn, SeedSpec(9), 50, threads=4)
    assert one == four
    # replicate k only depends on k, not on which other replicates run
    assert map_replicates(fn, SeedSpec(9), [10, 3]) == [one[10], one[3]]


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(2**64)
    with pytest.raises(ValueError):
        SeedSpec(0, -1)
