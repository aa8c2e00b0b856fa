"""Exception hierarchy shared by every module.

Each error carries a stable ``code`` (the class name) and a ``context`` dict so
the CLI can emit ``{code, message, context}`` JSON without special-casing.
"""
from __future__ import annotations

from typing import Any


class NerLabError(Exception):
    """Base class for domain errors (CLI exit status 1)."""

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_json(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "context": self.context}


class ParseError(NerLabError):
    pass


class EncodingError(ParseError):
    pass


class MalformedLine(ParseError):
    pass


class UnknownEntityType(ParseError):
    pass


class InvalidBio(ParseError):
    pass


class EmptyInput(ParseError):
    pass


class InvalidScheme(NerLabError):
    pass


class OverlappingSpans(NerLabError):
    pass


class SpanOutOfRange(NerLabError):
    pass


class EmptyDataset(NerLabError):
    pass


class DegenerateScheme(NerLabError):
    pass


class EmptyOriginalWithNonemptyReduced(NerLabError):
    pass


class ShapeMismatch(NerLabError):
    pass


class ZeroBaseline(NerLabError):
    pass


class ModelFormatError(NerLabError):
    pass


class InvalidGrid(NerLabError):
    pass
