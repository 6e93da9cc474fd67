"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations


class QfmeaError(Exception):
    """Base class for all engine errors."""


class SchemaError(QfmeaError):
    """Relation schemas are incompatible (unknown or mistyped variables)."""


class ModelError(QfmeaError):
    """A model, structure, scenario or effect file failed validation."""


class ParseError(ModelError):
    """A model file is not well-formed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class UnrealizableRequirement(QfmeaError):
    """No software output can produce the revised physical behavior."""


class OracleCapExceeded(QfmeaError):
    """The brute-force enumeration visited more assignments than allowed."""
