"""Shared exception types."""

from __future__ import annotations


class DtsdError(Exception):
    """Base for user-facing errors (CLI exit code 1)."""


class ParseError(DtsdError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class NotRegularError(DtsdError):
    pass


class StampedInputError(DtsdError):
    pass


class BudgetExceededError(DtsdError):
    pass


class UnsafeNetError(DtsdError):
    pass


class AnalysisError(DtsdError):
    """Markov-layer errors: non-ergodic chains, bad decompositions, queries."""


class InternalError(Exception):
    """Invariant violation inside the toolkit (CLI exit code 2)."""
