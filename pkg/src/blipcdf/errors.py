"""Exception types shared across the package.

The CLI maps these onto exit codes: ArgumentError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class BlipCdfError(Exception):
    """Base class for package errors."""


class ArgumentError(BlipCdfError, ValueError):
    """Invalid argument or configuration value."""


class DataError(BlipCdfError, ValueError):
    """Input data violates a contract (shape, range, missingness)."""


class NumericalError(BlipCdfError, RuntimeError):
    """A numerical procedure failed (singular system, diverged update)."""
