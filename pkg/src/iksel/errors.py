"""Exception hierarchy shared across the package."""


class IKSelError(Exception):
    """Base class for all errors raised by iksel."""


class ContractViolation(IKSelError, ValueError):
    """An argument breaks a documented precondition (shape, range, ...)."""


class ModelFileError(IKSelError):
    """A robot model file cannot be parsed or is internally inconsistent."""


class IncompatibleModelError(IKSelError):
    """A seed database was built for a different robot model."""


class DatabaseFormatError(IKSelError):
    """A seed database file is truncated or corrupt."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DatabaseTooLargeError(IKSelError):
    """A database build would exceed the configured record ceiling."""


class NoCandidatesError(IKSelError):
    """The seed query returned no records."""


class PoolExhaustedError(IKSelError):
    """Every candidate in the re-selection pool has already failed."""
