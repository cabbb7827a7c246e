"""Exception hierarchy shared by all modules."""


class MullinsSekerkaError(Exception):
    """Base class for package errors."""


class InvalidArgument(MullinsSekerkaError, ValueError):
    pass


class InvalidData(MullinsSekerkaError, ValueError):
    """Non-finite or otherwise unusable samples."""


class OutOfRange(InvalidArgument):
    pass


class GridMismatch(InvalidArgument):
    """Two grid functions were combined on different grids."""


class InvalidStencil(InvalidArgument):
    """A finite-difference stencil straddles the interface."""


class ResourceLimit(MullinsSekerkaError):
    pass


class NumericalFailure(MullinsSekerkaError, ArithmeticError):
    def __init__(self, message, *, node=None, condition=None, residual=None):
        super().__init__(message)
        self.node = node
        self.condition = condition
        self.residual = residual


class BlowUpSuspected(NumericalFailure):
    pass


class RefuseStep(MullinsSekerkaError):
    """The state is under-resolved; the step was not taken."""


class ConfigurationError(MullinsSekerkaError, ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NearSingularWarning(UserWarning):
    """Evaluation point is closer than one grid spacing to the interface."""
