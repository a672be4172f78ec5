"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config/validation problems exit 2,
numeric failures exit 3, IO failures exit 4.
"""


class FirmboundError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FirmboundError, ValueError):
    """Precondition violated by caller-supplied data."""


class DegeneratePosteriorError(InvalidInputError):
    """Posterior entry exactly zero where an LLR is required (LLR infinite)."""


class NumericError(FirmboundError, ArithmeticError):
    """Numeric failure inside an optimizer or linear solve."""


class DataIOError(FirmboundError, OSError):
    """Malformed or unreadable data file."""
