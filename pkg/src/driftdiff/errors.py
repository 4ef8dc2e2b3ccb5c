"""Exception hierarchy.

Input problems derive from ValueError (CLI exit 2); failures of a numerical
procedure on valid input derive from NumericalError (CLI exit 3).
"""


class ValidationError(ValueError):
    pass


class GridTooLarge(ValidationError):
    pass


class StabilityError(ValidationError):
    """Step sizes violate dt <= dx^2 / (2 d D) or a stencil weight is negative."""


class DegenerateInitialCondition(ValidationError):
    pass


class NumericalError(RuntimeError):
    pass


class ConvergenceError(NumericalError):
    pass


class PostselectionStarved(NumericalError):
    pass


class RootFindingError(NumericalError):
    pass
