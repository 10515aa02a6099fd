"""Exception hierarchy shared by the library and the CLI."""


class Rail3dError(Exception):
    """Base class for all package errors."""


class ContractError(Rail3dError, ValueError):
    """A precondition on the inputs was violated (CLI exit code 2)."""


class ShapeError(ContractError):
    """Array dimensions are inconsistent."""


class SolverError(Rail3dError, ArithmeticError):
    """A numerical solver failed (CLI exit code 3)."""


class SingularityError(SolverError):
    """A (transformed) linear operator is numerically singular.

    ``index`` holds the offending position, e.g. ``(i, j)`` for a Sylvester
    equation or ``j`` for the per-column solve of the tensor equation.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceError(SolverError):
    """An iteration did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
