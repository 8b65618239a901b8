"""Small dense linear algebra, Haar-random frames and reproducible RNG streams."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import DimensionError

MAX_DIM = 10

T = TypeVar("T")


def _check_dim(d: int) -> None:
    if not 2 <= d <= MAX_DIM:
        raise DimensionError(f"ambient dimension must be in [2, {MAX_DIM}], got {d}")


@dataclass(frozen=True)
class Frame:
    """Orthonormal basis of a j-dimensional linear subspace of R^d, stored as d x j columns."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float, copy=True)
        if cols.ndim != 2 or cols.shape[1] > cols.shape[0] or cols.shape[1] < 1:
            raise DimensionError(f"frame must be d x j with 1 <= j <= d, got {cols.shape}")
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def j(self) -> int:
        return self.columns.shape[1]

    @classmethod
    def standard(cls, d: int, j: int) -> "Frame":
        """Frame spanned by the first j coordinate vectors."""
        return cls(np.eye(d)[:, :j])

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T

    def orthonormality_residual(self) -> float:
        return float(np.abs(self.columns.T @ self.columns - np.eye(self.j)).max())


def random_unit_vector(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on S^{d-1} by Gaussian normalization."""
    _check_dim(d)
    shape = (d,) if size is None else (size, d)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def random_subspace(d: int, j: int, rng: np.random.Generator) -> Frame:
    """Haar-distributed j-subspace: QR of a Gaussian d x j matrix with sign-fixed R."""
    _check_dim(d)
    if not 1 <= j <= d:
        raise DimensionError(f"subspace dimension must be in [1, {d}], got {j}")
    g = rng.standard_normal((d, j))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return Frame(q * signs)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(d)."""
    Q = np.array(random_subspace(d, d, rng).columns)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def project(x: np.ndarray, frame: Frame) -> np.ndarray:
    """Coordinates of the orthogonal projection of x (or rows of x) in the frame basis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != frame.d:
        raise DimensionError(f"point has dimension {x.shape[-1]}, frame lives in R^{frame.d}")
    return x @ frame.columns


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")


def derive_stream(seed: SeedSpec | int, k: int) -> np.random.Generator:
    """Independent generator for replicate k.

    The stream is a pure function of (master_seed, stream_index, k), so the
    draws for replicate k do not depend on how replicates are scheduled.
    """
    if isinstance(seed, (int, np.integer)):
        seed = SeedSpec(int(seed))
    ss = np.random.SeedSequence(entropy=seed.master_seed, spawn_key=(seed.stream_index, int(k)))
    return np.random.Generator(np.random.PCG64(ss))


def map_replicates(
    fn: Callable[[np.random.Generator], T],
    seed: SeedSpec | int,
    indices: Sequence[int] | int,
    threads: int = 1,
) -> list[T]:
    """Run fn on the derived stream of each replicate index; results ordered by index."""
    if isinstance(indices, (int, np.integer)):
        indices = range(int(indices))
    indices = list(indices)

    def run(k):
        return fn(derive_stream(seed, k))

    if threads <= 1:
        return [run(k) for k in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, indices))
