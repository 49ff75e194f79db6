"""Exception hierarchy shared across the package.

Validation problems (bad config, malformed files, out-of-range dates) map to
CLI exit code 1; numerical failures (non-PSD covariances, optimizer
breakdowns) map to exit code 2.
"""

from __future__ import annotations


class BcIndexError(Exception):
    pass


class ValidationError(BcIndexError):
    pass


class ConfigError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class GridRangeError(ValidationError):
    pass


class NumericalError(BcIndexError):
    def __init__(self, message: str, day: int | None = None):
        super().__init__(message)
        self.day = day


class InitializationError(NumericalError):
    pass


class OptimizerFailureError(NumericalError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
