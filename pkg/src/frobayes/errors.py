"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries an ``exit_code``.
"""
from __future__ import annotations

from dataclasses import dataclass


class FrobayesError(Exception):
    exit_code = 1


class DomainError(FrobayesError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 1


class KindError(DomainError):
    """Classical object where a quantum one was required, or vice versa."""


class UndecidableError(DomainError):
    """The symbolic procedure cannot decide; compare numerically instead."""


class ShapeError(FrobayesError):
    exit_code = 2


class TypeCheckError(FrobayesError):
    exit_code = 2

    def __init__(self, message: str, junction=None):
        super().__init__(message)
        self.junction = junction


class NameLookupError(TypeCheckError):
    pass


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class ParseError(FrobayesError):
    exit_code = 2

    def __init__(self, message: str, span: SourceSpan | None = None):
        where = f" at {span}" if span is not None else ""
        super().__init__(message + where)
        self.span = span


class VerificationError(FrobayesError):
    exit_code = 3
