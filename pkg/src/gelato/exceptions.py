"""Exception hierarchy shared by all gelato modules."""


class GelatoError(Exception):
    """Base class for every error raised by this package."""


class DegenerateDataError(GelatoError, ValueError):
    """A column (or variance) is constant, so it cannot be standardized."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class DimensionError(GelatoError, ValueError):
    pass


class AsymmetricMatrixError(GelatoError, ValueError):
    pass


class NotPositiveDefiniteError(GelatoError, ValueError):
    """Raised when a Cholesky pivot is not strictly positive.

    ``pivot`` is the zero-based index of the failing pivot when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class NumericFailureError(GelatoError, ArithmeticError):
    pass


class SolverFailureError(NumericFailureError):
    """The lasso solver hit its sweep cap."""

    def __init__(self, message, kkt_violation=float("nan"), node=None):
        super().__init__(message)
        self.kkt_violation = kkt_violation
        self.node = node


class MleNonexistenceError(NumericFailureError):
    """The constrained MLE does not exist for the given input and edge set."""


class ConvergenceError(NumericFailureError):
    def __init__(self, message, kkt_gap=float("nan")):
        super().__init__(message)
        self.kkt_gap = kkt_gap


class DegenerateDrawError(GelatoError, ValueError):
    """A random model draw cannot satisfy its construction; reseed."""


class TuningFailureError(GelatoError, RuntimeError):
    pass


class ConfigError(GelatoError, ValueError):
    pass


class CsvParseError(ConfigError):
    """Malformed CSV input; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
