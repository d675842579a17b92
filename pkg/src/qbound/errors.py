"""Exception types raised across the package."""


class QBoundError(ValueError):
    """Base class for all domain errors."""


class NotSquare(QBoundError):
    pass


class NotHermitian(QBoundError):
    pass


class NotPSD(QBoundError):
    pass


class DimensionMismatch(QBoundError):
    pass


class EmptySupport(QBoundError):
    pass


class NotPure(QBoundError):
    pass


class OutOfDomain(QBoundError):
    pass


class TableRangeExceeded(QBoundError):
    pass


class NoResources(QBoundError):
    """Both the energy gap and the energy spread vanish."""


class Unnormalized(QBoundError):
    pass


class CombinatorialOverflow(QBoundError):
    pass


class MissingEstimate(QBoundError):
    pass


class ZeroRmse(QBoundError):
    pass


class OutcomeMismatch(QBoundError):
    pass


class PreconditionFailed(QBoundError):
    """A lemma instance does not satisfy one of its defining conditions.

    ``equation`` names the failing condition (``"pos"``, ``"dist"``,
    ``"normalization"`` or ``"unbiased"``).
    """

    def __init__(self, equation: str, message: str = ""):
        self.equation = equation
        super().__init__(f"{equation}: {message}" if message else equation)


class TruncationInsufficient(QBoundError):
    pass


class BadSpec(QBoundError):
    pass
