"""Exception taxonomy, aligned with the CLI exit codes."""

from __future__ import annotations


class TorusmfcError(Exception):
    """Base class for all package errors."""


class ConfigError(TorusmfcError):
    """Malformed or inconsistent configuration (CLI exit code 2)."""


class SolveFailure(TorusmfcError):
    """A solve could not be completed (CLI exit code 3)."""


class NumericFailure(SolveFailure):
    """Non-finite values or a non-convergent inner iteration."""


class FixedPointFailure(SolveFailure):
    """Picard iteration exhausted max_iter; carries the residual history."""

    def __init__(self, message: str, residual_history: list[float]):
        super().__init__(message)
        self.residual_history = list(residual_history)


class CheckFailure(TorusmfcError):
    """A property-check suite reported failures (CLI exit code 4)."""
