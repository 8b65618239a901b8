"""Small result containers shared by the functionals and the estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error (sample sd / sqrt(reps))."""

    mean: float
    stderr: float
    reps: int
    n: int | None = None
    route: str | None = None

    @classmethod
    def from_samples(cls, samples, n=None, route=None) -> "Estimate":
        x = np.asarray(samples, dtype=float)
        reps = len(x)
        sd = float(x.std(ddof=1)) if reps > 1 else float("nan")
        return cls(float(x.mean()), sd / math.sqrt(reps), reps, n, route)

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(self.mean * factor, self.stderr * abs(factor), self.reps, self.n, self.route)

    def z_against(self, other: "Estimate") -> float:
        """|difference| in units of the combined standard error."""
        se = math.hypot(self.stderr, other.stderr)
        diff = abs(self.mean - other.mean)
        return diff / se if se > 0 else (0.0 if diff == 0 else math.inf)

    def __str__(self):
        return f"{self.mean:.6g} ± {self.stderr:.2g}"
