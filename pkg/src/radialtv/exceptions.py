"""Exception hierarchy shared by all modules."""


class RadialTVError(Exception):
    """Base class for every error raised by radialtv."""


class DomainViolation(RadialTVError, ValueError):
    """A source position lies outside the closed ball of radius 1/2."""


class ShapeError(RadialTVError, ValueError):
    """Array shapes disagree with the sampling scheme."""


class EmptyInput(RadialTVError, ValueError):
    pass


class Unsupported(RadialTVError, NotImplementedError):
    """Operation not available for this dimension or configuration."""


class InvalidParams(RadialTVError, ValueError):
    pass


class MaxIterationsExceeded(RadialTVError, RuntimeError):
    pass


class NumericalBreakdown(RadialTVError, RuntimeError):
    pass


class DegeneratePolynomial(RadialTVError, ValueError):
    """|p| is identically 1, so its extremal set is not discrete."""


class NonSpanningDirections(RadialTVError, ValueError):
    pass


class CombinatorialCap(RadialTVError, RuntimeError):
    pass


class NotInjective(RadialTVError, ValueError):
    pass


class NoValidSubset(RadialTVError, RuntimeError):
    """No direction subset passed the splitting checks."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InfeasibleInterpolation(RadialTVError, ValueError):
    pass
