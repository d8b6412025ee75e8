"""Exception hierarchy.

The CLI maps :class:`ValidationError` (and subclasses) to exit code 2 and
:class:`ConvergenceError` to exit code 3.
"""


class GWDecoError(Exception):
    """Base class for all package errors."""


class ValidationError(GWDecoError, ValueError):
    """Invalid input: bad parameter, malformed table, unknown config key."""


class DomainError(ValidationError):
    """A model was evaluated at a point where it is undefined."""


class OutOfRangeError(ValidationError):
    """A frequency lies outside the sampled grid of an apparatus function."""


class DivergenceError(ValidationError):
    """The variance integral diverges for the requested spectrum/filter pair."""


class ConvergenceError(GWDecoError, RuntimeError):
    """The quadrature did not reach the requested tolerance.

    ``partial`` carries the best available result.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
