"""Exception types raised by selfsim.

Every error is a ``ValueError`` subclass so callers that only care about bad
input can catch that.  The CLI maps these onto a machine-readable error JSON.
"""


class SelfSimError(ValueError):
    """Base class for all library errors."""


class ModulusOutOfRange(SelfSimError):
    pass


class BadProbabilityVector(SelfSimError):
    pass


class DegenerateTranslations(SelfSimError):
    pass


class IndexOutOfRange(SelfSimError):
    pass


class QOutOfRange(SelfSimError):
    pass


class AtomBudgetExceeded(SelfSimError):
    pass


class NoZeroTranslation(SelfSimError):
    pass


class DegenerateScales(SelfSimError):
    pass


class TooFewPoints(SelfSimError):
    pass


class SupportOutOfRange(SelfSimError):
    pass


class GridMismatch(SelfSimError):
    pass


class InsufficientRungs(SelfSimError):
    pass


class CutoffOutsideTrustedBand(SelfSimError):
    pass


class NotInAttractorNeighborhood(SelfSimError):
    pass


class DepthExhausted(SelfSimError):
    pass


class DensityFloorHit(SelfSimError):
    pass


class EmptyWindow(SelfSimError):
    pass


class LineMissesAttractor(SelfSimError):
    pass
