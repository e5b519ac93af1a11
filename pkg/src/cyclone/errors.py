"""Exception hierarchy shared by all cyclone modules."""


class CycloneError(Exception):
    """Base class for every error raised by the package."""


class DomainError(CycloneError, ValueError):
    """Argument outside the domain of a regulation function or network."""


class SingularityError(CycloneError, ArithmeticError):
    """Derivative too close to zero for a Schwarzian to be meaningful."""


class ConvergenceFailure(CycloneError):
    """Fixed-point refinement could not reach the requested tolerance."""


class SuspectCount(CycloneError):
    """More than three fixed points found; the convexity hypothesis fails."""


class StepSizeUnderflow(CycloneError):
    """The adaptive integrator step size collapsed below resolution."""


class FormatError(CycloneError, ValueError):
    """Requested output format is incompatible with the data."""


class ConsistencyError(CycloneError, AssertionError):
    """Two independent computations of the same quantity disagree."""
