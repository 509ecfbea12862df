"""Exception types shared across the package.

Plain ``ValueError`` is used for malformed arguments (bad shapes, non-finite
input, out-of-range settings); the classes below mark conditions callers may
want to handle specifically.
"""


class InvalidModelError(ValueError):
    """Model specification cannot define a posterior (e.g. dead mixture column)."""


class InfeasibleAssignmentError(ValueError):
    """Injective correspondence requested with more observations than references."""


class PointSetParseError(ValueError):
    """Point-set CSV could not be parsed; message names the offending line."""


class NoRetainedReferencesError(ValueError):
    """Every reference point fell below the retention threshold."""


class UndefinedAutocorrelationError(ValueError):
    """Autocorrelation of a constant series (zero variance) was requested."""


class DivergedTrajectoryError(RuntimeError):
    """Numerical integration produced non-finite values; caller should reject."""
