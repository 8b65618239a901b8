"""Random polytopes spanned by boundary points of smooth convex bodies.

Monte Carlo estimators of the intrinsic-volume deficit V_j(K) - E V_j(K_n),
the curvature integrals of its asymptotic law, and the tooling to compare the
two.
"""

from .bodies import Ball, Capsule, Cube, Ellipsoid, body_from_params
from .estimators import calibrate_c, cap_profile, deficit, deficit_direct, deficit_projection, fit_rate
from .functionals import limit_integral, predicted_deficit, schuett_werner_constant
from .linalg import SeedSpec
from .results import Estimate
from .sampling import CurvaturePower, Perturbed, Uniform, density_from_params

__all__ = [
    "Ball", "Capsule", "Cube", "Ellipsoid", "body_from_params",
    "calibrate_c", "cap_profile", "deficit", "deficit_direct", "deficit_projection", "fit_rate",
    "limit_integral", "predicted_deficit", "schuett_werner_constant",
    "SeedSpec", "Estimate",
    "CurvaturePower", "Perturbed", "Uniform", "density_from_params",
]
