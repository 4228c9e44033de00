"""Exception types shared across the toolkit.

Kept deliberately small: callers (and the CLI exit-code mapping) only need to
tell apart bad arguments, failed random generation, malformed input files, and
blown resource budgets.
"""


class InvalidParameterError(ValueError):
    """An argument is outside the documented domain of an operation."""


class GenerationFailureError(RuntimeError):
    """A randomized generator exhausted its retry budget."""


class GraphFormatError(ValueError):
    """An edge-list file is malformed or fails validation.

    Carries the offending line number when one is known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BudgetExceededError(RuntimeError):
    """An exact computation would exceed its configured work budget."""
