"""Exception hierarchy shared across the package."""


class TumorOcpError(Exception):
    """Base class for all package errors."""


class GridMismatchError(TumorOcpError):
    """Fields defined on different grids were combined."""


class ConfigError(TumorOcpError):
    """Invalid or unknown configuration input."""


class SolverError(TumorOcpError):
    """A linear or nonlinear solve failed.

    Carries the residual and, when raised inside a time loop, the step index.
    """

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class DivergenceError(SolverError):
    """NaN/Inf detected in a solver iterate."""


class NonConvergenceError(TumorOcpError):
    """An outer iteration (optimizer) hit its budget without converging."""
