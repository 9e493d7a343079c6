"""Exception hierarchy shared by the package."""


class SpecSegError(Exception):
    """Base class for all package errors."""


class InputError(SpecSegError, ValueError):
    """Malformed input data or an invalid parameter."""


class NumericalError(SpecSegError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""


class EigenSolverError(NumericalError):
    """Symmetric eigendecomposition did not converge."""


class DegenerateSpectrumError(NumericalError):
    """Diagonal spectrum too close to zero on too many frequencies."""


class SingularRegressorError(NumericalError):
    """Least-squares design matrix is rank deficient."""

    def __init__(self, order, message=None):
        self.order = order
        super().__init__(message or f"singular regressor matrix at order {order}")
