"""Exception types shared across the package."""


class GenfunError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(GenfunError):
    """Vector or matrix arguments have incompatible shapes."""


class NonFiniteValue(GenfunError):
    """A map returned NaN or infinity where a finite value was required."""


class SingularJacobian(GenfunError):
    """Newton Jacobian is numerically rank-deficient at an iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoConvergence(GenfunError):
    """Iteration budget exhausted without meeting the residual tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CayleySingular(GenfunError):
    """I - L/2 (forward) or Phi + I (inverse) is singular; no map of this type."""


class MultipleRootSuspected(GenfunError):
    """Two distinct Newton starts converged to visibly different roots."""


class DegeneratePhase(GenfunError):
    """Quadratic phase form is singular; the Gaussian integral is undefined."""


class AntipodalPair(GenfunError):
    """Sphere points are (numerically) antipodal; the construction is undefined."""


class TangentTooLong(GenfunError):
    """Tangent vector has length >= 2; outside the covector-ball domain."""


class NotTangent(GenfunError):
    """Vector is not orthogonal to its base point within tolerance."""


class DegenerateConfiguration(GenfunError):
    """Midpoint triple does not determine a spherical triangle."""


class ConfigInvalid(GenfunError):
    """Experiment configuration is missing a field or has a wrongly-typed one."""
