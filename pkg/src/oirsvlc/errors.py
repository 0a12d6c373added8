"""Exception types raised across the package."""


class OirsVlcError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGeometryError(OirsVlcError):
    """Zero-length or antiparallel vectors where a direction is required."""


class ShapeError(OirsVlcError):
    """Array dimensions inconsistent with the operation's contract."""


class ZeroGainError(OirsVlcError):
    """Relative growth rate requested at a point of zero channel gain."""


class SingularGeometryError(OirsVlcError):
    """Taylor coefficients diverge (incidence cosine at or below zero)."""


class InfiniteCoherenceError(OirsVlcError):
    """Flat gain profile: the coherence length is unbounded.

    Callers that minimize over directions treat this as +inf.
    """


class SingularSystemError(OirsVlcError):
    """Ridge system not invertible (rank-deficient pilots at sigma = 0)."""


class LayoutError(OirsVlcError):
    """Grid too small, or spacing incompatible with the aligned block."""


class IncompleteEstimationError(OirsVlcError):
    """Sample gathering requested before every block was estimated."""


class IdentifiabilityError(OirsVlcError):
    """Fewer pilot slots than LEDs: the per-block estimate is underdetermined."""


class ZeroReferenceError(OirsVlcError):
    """NMSE requested against an all-zero reference tensor."""


class ConfigError(OirsVlcError):
    """Configuration file parse or validation failure.

    The message names the offending key path.
    """
