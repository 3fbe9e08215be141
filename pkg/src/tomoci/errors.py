"""Exception hierarchy shared across the package.

Every error raised by the library maps onto one of the CLI exit codes:
validation problems (bad arguments, malformed files) exit with 1,
numerical failures (rank deficiency, degenerate data) exit with 2.
"""


class TomociError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidArgumentError(TomociError):
    """An argument violates a documented precondition."""

    exit_code = 1


class SchemaError(TomociError):
    """A structured file failed validation.

    Carries the path of the offending field so callers can point at it.
    """

    exit_code = 1

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class NotInformationallyCompleteError(TomociError):
    """The measurement design does not determine the object being estimated."""

    exit_code = 2


class DegenerateDataError(TomociError):
    """Observed data is too degenerate for the requested computation."""

    exit_code = 2
