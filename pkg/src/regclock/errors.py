"""Exception hierarchy shared across the package."""


class RegclockError(Exception):
    """Base class for all package-specific errors."""


class DomainError(RegclockError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class BranchCutError(DomainError):
    """A transform argument sits on the branch cut of a Laplace transform.

    Callers that need the upper edge of the cut (keyhole inversion) must
    request it explicitly via the ``upper_edge`` flag.
    """


class ConvergenceRegionError(RegclockError, ValueError):
    """A series evaluation was requested outside its convergence region.

    Disk-limited series refuse rather than extrapolate; callers fall back
    to the quadrature route.
    """


class UnsupportedError(RegclockError, ValueError):
    """The requested combination of model and operation is not supported."""


class NumericalError(RegclockError, RuntimeError):
    """A quadrature or root solve failed to reach its tolerance."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)


class InfeasibleMomentsError(RegclockError, ValueError):
    """Sample moments admit no valid parameter set at this regulation degree."""
