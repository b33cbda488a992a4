"""Exception hierarchy shared by every module."""


class DroBoundsError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(DroBoundsError, ValueError):
    """An argument is outside its documented domain."""


class AssumptionError(InvalidParameterError):
    """A structural precondition of a bound (weight shape, coefficient sign) fails."""


class UnsupportedDistortionError(AssumptionError):
    """The distortion weight is neither non-decreasing nor non-negative."""


class CapacityError(DroBoundsError):
    """A brute-force routine was asked for a problem larger than it enumerates."""


class NoSolutionError(DroBoundsError, ArithmeticError):
    """Root bracketing for the Lagrange multiplier failed."""


class NoWitnessError(DroBoundsError):
    """The linear block is zero, so the ball image is the single reference law."""


class InfeasibleTargetError(InvalidParameterError):
    """Requested targets lie outside the reachable budget."""


class ConsistencyError(DroBoundsError):
    """An internal cross-check between two computations disagreed."""
