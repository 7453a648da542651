"""Exception types shared across the package."""


class CocaError(Exception):
    """Base class for errors raised by this package."""


class ConvergenceError(CocaError):
    """An iterative routine exhausted its iteration budget.

    Carries the last iterate and its residual so callers can inspect or
    reuse the partial result.
    """

    def __init__(self, message, last_iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


class DegenerateInputError(CocaError, ValueError):
    """Input admits no meaningful solution (zero matrix, zero operator)."""


class SingularMatrixError(CocaError, ValueError):
    """A matrix required to be positive definite or invertible is not.

    ``pivot`` is the 1-based index of the failing Cholesky pivot when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ParseError(CocaError, ValueError):
    """Malformed input file. ``row``/``col`` are 1-based when known."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class MonotonicityError(CocaError, RuntimeError):
    """The alternating solver's objective increased beyond slack."""


class StratificationError(CocaError, ValueError):
    """A class is missing from a training split of a stratified fold set."""
