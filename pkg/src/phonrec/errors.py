"""Exception types shared across the package."""


class PhonrecError(Exception):
    """Base class for package errors."""


class ConfigError(PhonrecError):
    """Invalid configuration. Carries the offending field path when known."""

    def __init__(self, message, field=None):
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class ShapeError(PhonrecError):
    """Array shape does not match the grid it is paired with."""


class SolverBlowupError(PhonrecError):
    """Time marching produced non-finite or runaway values."""


class DatasetFormatError(PhonrecError):
    """Dataset file is malformed. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
