"""Exception hierarchy shared by the raildyn modules."""


class RailDynError(Exception):
    """Base class for every error raised by raildyn."""


class ConfigError(RailDynError, ValueError):
    """Invalid parameters, configuration values or method/damping combinations."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class NumericalError(RailDynError, ArithmeticError):
    """A factorization or decomposition could not be trusted."""


class DefectiveMatrixError(NumericalError):
    """The state matrix is not diagonalizable within tolerance."""

    def __init__(self, message, smallest_singular_value):
        self.smallest_singular_value = smallest_singular_value
        super().__init__(message)


class LoadPlacementError(RailDynError):
    """The load index does not land on a vertical rail DOF."""

    def __init__(self, message, index, nearest):
        self.index = index
        self.nearest = nearest
        super().__init__(message)


class CalibrationError(RailDynError):
    """No element length in the bracket reproduces the target frequency."""

    def __init__(self, message, sweep):
        self.sweep = sweep
        super().__init__(message)
