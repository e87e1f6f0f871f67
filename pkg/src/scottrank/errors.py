"""Exception hierarchy shared by every module.

The CLI maps :class:`ScottError` subclasses to exit code 2 and
:class:`InternalError` to exit code 3.
"""


class ScottError(Exception):
    """Base class for user-facing failures (bad input, unmet precondition)."""


class ParseError(ScottError, ValueError):
    pass


class ValidationError(ScottError, ValueError):
    """A metric axiom is violated; ``violation`` holds the first offender."""

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class PreconditionError(ScottError, ValueError):
    pass


class IllegalMoveError(ScottError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class StrategyError(ScottError):
    """A supplied strategy loses a line it was supposed to win."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class OracleCapError(PreconditionError):
    pass


class InternalError(Exception):
    """An invariant the code relies on has been breached."""
