"""Exception types shared across the package."""


class GsamulError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(GsamulError, ValueError):
    """An argument violates an operation's preconditions."""


class DegenerateInputError(InvalidInputError):
    """Input is well-formed but carries no usable information
    (e.g. a constant feature column, a constant response)."""


class DegenerateStateError(GsamulError, RuntimeError):
    """Model state collapsed into something unrecoverable
    (e.g. every coefficient group shrunk to zero)."""


class NumericalDivergenceError(GsamulError, RuntimeError):
    """A training objective became non-finite."""
