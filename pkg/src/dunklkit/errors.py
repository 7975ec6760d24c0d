"""Exception hierarchy shared by all dunklkit modules."""


class DunklError(Exception):
    """Base class for dunklkit errors."""


class ArityMismatchError(DunklError, ValueError):
    """Operands have incompatible numbers of variables."""


class DegenerateLambdaError(DunklError, ValueError):
    """The spectral point is not strictly dominant (or its gaps are too small)."""


class RecursionDepthError(DunklError, ValueError):
    """The requested rank exceeds the configured maximum."""


class IntertwineSolveError(DunklError, ArithmeticError):
    """The degree-wise linear system for the intertwining operator failed."""

    def __init__(self, message, k=None, degree=None):
        super().__init__(message)
        self.k = k
        self.degree = degree


class CostGuardError(DunklError, ValueError):
    """An evaluation would exceed the configured cost budget."""
