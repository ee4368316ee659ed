"""Exception hierarchy for powerspd."""


class PowerSPDError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PowerSPDError, ValueError):
    """A matrix falls outside the domain of the requested operation.

    Raised for instance when a non-positive eigenvalue meets a non-positive
    power, or when a negative eigenvalue exceeds the semi-definite tolerance.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ConvergenceError(PowerSPDError, RuntimeError):
    """The Jacobi eigen-solver hit its sweep cap."""


class EmptyInputError(PowerSPDError, ValueError):
    pass


class DegenerateError(PowerSPDError, ValueError):
    """A quantity is undefined because its normaliser vanishes."""


class SingularSigmaError(PowerSPDError, ArithmeticError):
    """The fitted Gaussian covariance is singular or badly conditioned."""


class AllPointsFailedError(PowerSPDError, RuntimeError):
    """No grid point produced a finite profile log-likelihood."""


class RejectionLimitError(PowerSPDError, RuntimeError):
    """Rejection sampling could not produce a positive definite draw."""


class ParseError(PowerSPDError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    pass
