"""Exception hierarchy shared by all minkflow modules."""


class MinkflowError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(MinkflowError, ValueError):
    """An argument is outside its admissible range."""


class DomainError(MinkflowError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class SpacelikeError(DomainError):
    """A gradient reached or exceeded the light cone, ``|Du| >= 1``."""


class BoundaryError(DomainError):
    """A stencil was requested at a node without a full one-ring."""


class DegenerateError(DomainError):
    """Every node of a curvature field failed k-convexity."""


class ProfileDomainError(DomainError):
    """A radial profile was evaluated beyond its truncation radius."""


class IntegrationError(MinkflowError, RuntimeError):
    """The ODE integrator failed (e.g. step-size underflow)."""

    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class ConvergenceError(MinkflowError, RuntimeError):
    """Two independent routes to the same limit disagree."""


class StiffnessError(MinkflowError, RuntimeError):
    """Time-step halving was exhausted without an admissible step."""


class ComparisonError(MinkflowError, AssertionError):
    """A sub/supersolution sandwich was violated beyond its slack."""
