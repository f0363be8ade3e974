"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GpcsError(Exception):
    exit_code = 1


class InvalidArguments(GpcsError, ValueError):
    exit_code = 2


class ValidationError(InvalidArguments):
    """Non-finite or malformed input data."""


class DimensionMismatch(InvalidArguments):
    pass


class UnknownSetting(InvalidArguments):
    pass


class MissingLabels(InvalidArguments):
    pass


class InputError(GpcsError):
    exit_code = 3


class ParseError(GpcsError):
    exit_code = 4

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class NumericalError(GpcsError, ArithmeticError):
    exit_code = 5


class DegenerateCluster(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class SingularCovariance(NumericalError):
    pass


class NoFeasibleK(NumericalError):
    pass


class MissingMoments(NumericalError):
    pass


class BootstrapFailure(NumericalError):
    pass


class NonConvergence(GpcsError):
    exit_code = 6


class EigenTieWarning(RuntimeWarning):
    """The 2x2 covariance has (numerically) equal eigenvalues."""
