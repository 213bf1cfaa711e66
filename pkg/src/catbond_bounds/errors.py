"""Exception hierarchy shared by the library and the CLI."""


class CatbondError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CatbondError, ValueError):
    """Invalid parameters, presets or configuration files."""


class DataError(CatbondError, ValueError):
    """Malformed or incomplete input data (paths, rate tables)."""


class NumericalError(CatbondError, ArithmeticError):
    """Base class for failures inside numerical routines."""


class DomainError(NumericalError, ValueError):
    """Argument outside the domain of a special function."""


class BracketError(NumericalError):
    """Root target not enclosed by the bracket values."""


class ConvergenceError(NumericalError):
    """Iteration budget exhausted before reaching the tolerance."""


class AccuracyError(NumericalError):
    """Quadrature did not reach the requested accuracy.

    The best available estimate is kept on ``estimate`` together with the
    reported absolute error bound.
    """

    def __init__(self, message: str, estimate: float, abs_error: float):
        super().__init__(message)
        self.estimate = estimate
        self.abs_error = abs_error
