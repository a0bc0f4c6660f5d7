"""Exception types shared across the package."""


class OpschedError(Exception):
    """Base class for all errors raised by this package."""


class GraphParseError(OpschedError):
    """Graph file is not well-formed (syntax level, position-reported)."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class GraphValidationError(OpschedError):
    """Graph violates a structural invariant (cycle, dangling edge, ...)."""


class ConsistencyError(OpschedError):
    """Caller-supplied state contradicts itself (non-closed completed set,
    release of an unknown op, mismatched comparison inputs)."""


class UnderdeterminedError(OpschedError):
    """Not enough independent samples to fit the requested model."""


class InsufficientHistoryError(OpschedError):
    """Prediction requested from a history with fewer than two samples."""


class ConfigError(OpschedError):
    """Invalid or incomplete run configuration (maps to CLI exit code 2)."""
