"""Exception hierarchy shared by the library and the CLI.

Each family carries the process exit code the CLI maps it to.
"""


class GKPDDError(Exception):
    exit_code = 1


class PreconditionError(GKPDDError, ValueError):
    """An input violated a documented precondition."""

    exit_code = 2


class InvalidDimensionError(PreconditionError):
    pass


class DomainError(PreconditionError):
    pass


class ConvergenceError(GKPDDError, RuntimeError):
    """A numerical procedure did not reach its accuracy target."""

    exit_code = 3

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class InfiniteSqueezingError(ConvergenceError):
    pass


class FitError(ConvergenceError):
    pass


class OutputError(GKPDDError, OSError):
    exit_code = 4


class TruncationWarning(UserWarning):
    """Displacement amplitudes are large compared to the Fock cutoff."""
