"""Exception hierarchy shared by every module."""


class CopmmError(Exception):
    """Base class for all errors raised by copmm."""


class ValidationError(CopmmError, ValueError):
    """A precondition on a configuration or an input was violated.

    The message always names the violated constraint.
    """


class FieldMismatchError(ValidationError):
    """Operands belong to different prime fields."""


class BelowThresholdError(CopmmError):
    """Fewer responses than the recovery threshold were supplied."""


class InsufficientWorkersError(BelowThresholdError):
    """The simulated cluster cannot produce K responses."""


class EnumerationTooLargeError(CopmmError):
    """An exhaustive audit would exceed the randomness-space guard."""

    def __init__(self, required: int, limit: int):
        super().__init__(
            f"randomness space has {required} states, exceeding the limit of {limit}"
        )
        self.required = required
        self.limit = limit
