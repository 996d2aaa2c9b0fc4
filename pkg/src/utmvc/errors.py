"""Exception types shared across the package."""


class UTMError(Exception):
    """Base class for all package-specific errors."""


class EvaluationError(UTMError):
    """A user-supplied function returned non-finite values."""


class DissipativityError(UTMError):
    """The coefficient argument bound reaches or exceeds pi/2."""


class ContourRadiusError(UTMError):
    """A spectral-parameter value lies inside the excluded disc |k| <= r."""


class StiffnessError(UTMError):
    """The adaptive propagation of the accumulation system failed."""

    def __init__(self, msg, k=None, x=None):
        super().__init__(msg)
        self.k = k
        self.x = x


class TruncationError(UTMError):
    """The tail of an unbounded domain carries too much mass to truncate."""


class QuadratureError(UTMError):
    """An adaptive quadrature did not reach the requested tolerance."""


class StabilityError(UTMError):
    """An exponential factor would overflow; the overflow guard tripped."""


class CoverageError(UTMError):
    """A point was requested outside the tabulated series grid."""


class BoundaryRankError(UTMError):
    """The concatenated boundary matrix has rank below 2."""


class CaseError(UTMError):
    """An operation was attempted for an unsupported boundary case."""


class RootIsolationError(UTMError):
    """Winding-number root isolation failed to converge."""


class BudgetError(UTMError):
    """The requested evaluation time is too small for the node budget."""

    def __init__(self, msg, suggested_t_min=None):
        super().__init__(msg)
        self.suggested_t_min = suggested_t_min


class OracleError(UTMError):
    """A reference solver cannot handle the requested configuration."""


class ConfigError(UTMError):
    """Configuration file is malformed or violates the schema."""
