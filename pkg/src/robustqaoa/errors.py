"""Exception hierarchy.

Everything derives from :class:`RobustQaoaError`.  The CLI maps
:class:`ConfigInvalid` to exit code 1 and :class:`NumericalError`
subclasses to exit code 2.
"""


class RobustQaoaError(Exception):
    pass


class ConfigInvalid(RobustQaoaError, ValueError):
    """A configuration field is missing, unknown or out of range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(RobustQaoaError, ArithmeticError):
    pass


# densela
class NotHermitian(NumericalError, ValueError):
    pass


class NoConvergence(NumericalError):
    pass


class DegenerateGroundState(NumericalError):
    pass


# spinmodel
class SiteOutOfRange(RobustQaoaError, ValueError):
    pass


class ChainTooShort(RobustQaoaError, ValueError):
    pass


class InvalidAmplitudes(RobustQaoaError, ValueError):
    pass


# qaoa engine
class DimensionMismatch(RobustQaoaError, ValueError):
    pass


class StepTooSmall(RobustQaoaError, ValueError):
    pass


class NotSymmetric(NumericalError, ValueError):
    pass


# uncertainty
class TooManySamples(RobustQaoaError, ValueError):
    pass


class EmptySampleSet(RobustQaoaError, ValueError):
    pass


# subproblem
class InfeasibleBounds(NumericalError, ValueError):
    pass


class Unbounded(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


# optimizers
class InfeasibleStart(RobustQaoaError, ValueError):
    pass
