"""Exception types raised across the package."""


class RandhullError(Exception):
    """Base class for all package errors."""


class DimensionError(RandhullError, ValueError):
    pass


class BoundaryError(RandhullError, ValueError):
    """A point expected on the boundary of a body is not there (or is singular)."""


class EnvelopeError(RandhullError):
    """Rejection sampling envelope violated or rejection loop did not terminate."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NumericalError(RandhullError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoAnalyticValue(RandhullError):
    """No closed form (or quadrature ground truth) for this body/order/dimension."""


class RouteError(RandhullError, ValueError):
    """The requested estimator route does not apply to this (j, d)."""


class HypothesisViolation(RandhullError, ValueError):
    """The body or density does not satisfy the assumptions of the asymptotic law."""


class CalibrationMissing(RandhullError, KeyError):
    pass


class ConfigError(RandhullError, ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
