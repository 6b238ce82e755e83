"""Exception types shared across the package.

Numeric routines raise these instead of returning sentinel values; the
command line maps them to exit code 2.
"""


class InvalidInput(ValueError):
    """Arguments violate a documented precondition (shape, finiteness, range)."""


class NotPositiveDefinite(ArithmeticError):
    """A matrix required to be symmetric positive definite is not."""


class InsufficientClasses(ValueError):
    """Fewer than two populated classes where a discriminant is required."""


class FormatError(ValueError):
    """A serialized payload does not match its documented format."""


class TrainingDiverged(ArithmeticError):
    """A training objective or gradient became non-finite; run aborted."""
