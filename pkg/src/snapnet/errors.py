"""Exception types shared across the package."""


class SnapnetError(Exception):
    """Base class for errors raised by snapnet."""


class ConfigError(SnapnetError, ValueError):
    """Invalid parameters or configuration."""


class DataError(SnapnetError, ValueError):
    """Malformed or inconsistent input data (files, snapshot arrays)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
