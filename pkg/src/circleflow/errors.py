"""Exception hierarchy shared by all modules."""


class CircleflowError(Exception):
    """Base class for every error raised by the package."""


class InvalidStateError(CircleflowError, ValueError):
    pass


class GridMismatchError(CircleflowError, ValueError):
    pass


class UnsupportedCoarsenError(CircleflowError, ValueError):
    pass


class BlowUpError(CircleflowError):
    """Raised when the solution sup-norm exceeds the configured bound.

    ``last_time`` is the last time at which the state was still finite and
    below the bound; ``iterate`` is set by Poincare iteration drivers.
    """

    def __init__(self, message, last_time, iterate=None):
        super().__init__(message)
        self.last_time = last_time
        self.iterate = iterate


class DegenerateFunctionError(CircleflowError, ValueError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NonConvergenceError(CircleflowError):
    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class SingularJacobianError(CircleflowError):
    pass


class NonHyperbolicError(CircleflowError):
    pass


class GapViolationError(CircleflowError, ValueError):
    pass


class UnclassifiableError(CircleflowError):
    pass


class PreconditionError(CircleflowError, ValueError):
    pass


class ExpressionError(CircleflowError, ValueError):
    """Problem in a nonlinearity expression; ``position`` is a 0-based offset."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position
