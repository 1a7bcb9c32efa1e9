"""Exception hierarchy shared by all modules."""


class WarpflowError(Exception):
    """Base class for every error raised by the package."""


class ConstructionError(WarpflowError):
    """Invalid parameters for a space, surface or configuration."""


class DomainError(WarpflowError, ValueError):
    """An argument lies outside the tabulated or admissible range."""


class NumericalFailure(WarpflowError):
    """Quadrature, tabulation or time stepping did not converge."""


class MalformedProfile(ConstructionError):
    """A radial profile violates the graph invariants (poles, grid, horizon)."""


class SpeedUndefined(NumericalFailure):
    """Inverse mean curvature speed requested where H is not positive."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class StepCollapse(NumericalFailure):
    """Step size halved too many times without producing a valid state."""


class PreconditionViolation(WarpflowError, ValueError):
    """An inequality check was called on data outside its hypotheses."""
