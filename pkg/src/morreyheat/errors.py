"""Exception hierarchy shared by every module."""


class MorreyHeatError(ValueError):
    """Base class for all domain errors raised by the toolkit."""


class InadmissibleError(MorreyHeatError):
    """Exponents fall outside the window where the smoothing estimates hold."""


class DegenerateEndpointError(MorreyHeatError):
    """The upper interpolation endpoint would be infinite or non-positive."""


class SingularPointError(MorreyHeatError):
    """A function was evaluated exactly at its singularity."""


class NonIntegrableError(MorreyHeatError):
    """A power of the function is not (locally) integrable."""


class UnsupportedError(MorreyHeatError):
    """The requested representation, dimension or order has no code path."""


class InfiniteMeasureError(MorreyHeatError):
    """A super-level set has infinite Lebesgue measure."""


class DivergentError(MorreyHeatError):
    """A norm integral diverges.

    ``direction`` is ``"t->0"`` or ``"t->inf"`` when known.
    """

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class UnboundedError(MorreyHeatError):
    """A supremum is infinite."""


class OverlapError(MorreyHeatError):
    """Balls that must be pairwise disjoint intersect."""


class MeshUnderresolvedError(MorreyHeatError):
    """Two mesh resolutions disagree beyond the accepted tolerance."""
