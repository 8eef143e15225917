"""Exception hierarchy shared across the harness.

The CLI maps these onto exit codes: ConfigError -> 2, BackendError -> 3,
DataError -> 4.
"""


class CtxprobeError(Exception):
    """Base class for all harness errors."""


class ConfigError(CtxprobeError):
    """Invalid or incomplete run configuration."""


class DataError(CtxprobeError):
    """Malformed, inconsistent, or insufficient input data."""


class BackendError(CtxprobeError):
    """Backend transport or protocol failure."""

    def __init__(self, message: str, attempts: int | None = None, status: int | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.status = status


class CapabilityError(BackendError):
    """The configured backend lacks a capability the pipeline requires."""
