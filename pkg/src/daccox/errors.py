"""Exception hierarchy shared by the library and the CLI."""


class DacCoxError(Exception):
    """Base class for all package errors."""


class DataError(DacCoxError, ValueError):
    """Malformed or inconsistent survival data."""


class NumericalError(DacCoxError, ArithmeticError):
    """A numerical routine failed (overflow, singular matrix, no convergence)."""


class SingularMatrixError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass
