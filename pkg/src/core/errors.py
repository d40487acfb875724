"""Exception hierarchy for the smoothing package.

Every error carries the process exit code the command-line front end
reports for it: 2 for usage errors, 3 for data errors and 4 for numerical
failures. Validation errors also subclass ValueError so library callers can
catch them the usual way.
"""

from typing import Optional


class SmootherError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(SmootherError, ValueError):
    """Invalid parameters or configuration."""

    exit_code = 2


class DataError(SmootherError, ValueError):
    """Input data that cannot be smoothed as given."""

    exit_code = 3


class NumericalError(SmootherError):
    """A numerical procedure could not complete."""

    exit_code = 4


class InvalidOrder(UsageError):
    """Difference order outside {1, 2, 3}."""


class InvalidRange(UsageError):
    """Empty or reversed parameter range."""


class InvalidProbeCount(UsageError):
    """Too few stochastic probes requested."""


class UnknownExpression(UsageError):
    """Unknown analytic test function name."""


class DomainError(UsageError):
    """Sample positions outside the domain of an analytic function."""


class DimensionMismatch(DataError):
    """Vector or matrix sizes disagree."""


class NonFiniteInput(DataError):
    """NaN or infinite value where a finite one is required."""


class ParseError(DataError):
    """Malformed CSV content.

    Attributes:
        line: 1-based line number in the input file, header included.
    """

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateAbscissa(DataError):
    """Two rows share the same sample position."""


class TooFewRows(DataError):
    """Fewer rows than the smoother needs."""


class SpacingError(DataError):
    """Unequal sample spacing under strict spacing checks."""


class NotPositiveDefinite(NumericalError):
    """Cholesky factorization met a non-positive pivot."""


class DegenerateHat(NumericalError):
    """A leverage is numerically 1, so the CV residual is undefined."""


class AllPointsDegenerate(NumericalError):
    """Too few usable points remain on a selection curve."""
