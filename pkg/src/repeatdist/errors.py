"""Exception hierarchy shared by all modules."""


class RecombinationError(Exception):
    """Base class for library errors."""


class DomainError(RecombinationError, ValueError):
    """A parameter lies outside the domain of the operation."""


class CapacityError(RecombinationError, ValueError):
    """The truncation bound is too small for the requested object."""


class TransformDomainError(RecombinationError, ValueError):
    """A coefficient transform is undefined or numerically unreliable."""


class NumericalFailure(RecombinationError, RuntimeError):
    """An iterative computation did not reach its goal."""


class LeakExceeded(NumericalFailure):
    """Probability mass pushed beyond the truncation bound grew too large."""


class MaxStepsReached(NumericalFailure):
    """An iteration stopped at its step budget without converging."""
