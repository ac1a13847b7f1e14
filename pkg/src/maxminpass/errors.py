"""Shared exception types."""


class ValidationError(ValueError):
    """A spec, config or argument failed an admissibility check."""


class GridMismatchError(ValidationError):
    """A grid function was evaluated against the wrong grid."""


class InfeasibleError(RuntimeError):
    """A constraint level cannot be reached from the given point."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget.

    Carries the best value found so far in ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
