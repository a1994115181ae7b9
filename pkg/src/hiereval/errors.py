"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class HierEvalError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(HierEvalError):
    """Malformed document syntax (not valid UTF-8 / not valid JSON)."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class SchemaError(HierEvalError):
    """Structurally valid document violating the expected schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ValidationError(HierEvalError):
    """Semantic rule violation (duplicate ids, unknown image ids, ...)."""


class ContractViolation(HierEvalError):
    """A caller broke an API precondition (mixed grids, bad threshold, ...)."""


class GenerationError(HierEvalError):
    """Fixture generation cannot satisfy the requested configuration."""


class OracleLimitError(HierEvalError):
    """Scene exceeds the size limits of the dense brute-force oracle."""
