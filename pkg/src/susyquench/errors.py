"""Exception types shared across the package.

Each maps to a distinct CLI exit code so batch drivers can tell apart
bad input, insufficient truncation, combinatorial blowup and numerical
breakdown.
"""


class SusyQuenchError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(SusyQuenchError):
    """Invalid configuration text or semantically inconsistent settings."""

    exit_code = 2

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}" + (f", col {column}" if column is not None else "") + f": {message}"
        super().__init__(message)


class TruncationError(SusyQuenchError):
    """Basis truncation cannot meet the requested completeness target."""

    exit_code = 3


class CombinatorialCapError(SusyQuenchError):
    """Final-state enumeration would exceed the configured candidate cap."""

    exit_code = 4


class NumericalError(SusyQuenchError):
    """Non-finite values or failed root bracketing."""

    exit_code = 5
