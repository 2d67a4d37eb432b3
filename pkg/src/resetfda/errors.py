"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes; library users catch them
directly.
"""


class ResetFdaError(Exception):
    """Base class for all package errors."""


class DataError(ResetFdaError):
    """Malformed, inconsistent, or under-determined input data."""


class NumericError(ResetFdaError):
    """A numerical procedure failed (singular system, non-convergence)."""


class ModelFormatError(ResetFdaError):
    """Persisted model file has an incompatible schema or version."""
