"""Exception hierarchy used throughout the package."""


class NdweakError(Exception):
    """Base class for all errors raised by ndweak."""


class ConformanceError(NdweakError, ValueError):
    """Array shapes or matrix properties do not match the system."""


class PhysicsRangeError(NdweakError, ValueError):
    """A parameter lies outside its physically admissible range."""


class EmptyPostselectionError(NdweakError, ValueError):
    """All postselection weights vanish."""


class PostselectionImpossibleError(NdweakError):
    """The probability of a successful postselection is (numerically) zero."""


class NoppsError(NdweakError):
    """A first-order formula was requested for nearly orthogonal pre/postselection."""


class ConditioningError(NdweakError, ValueError):
    """Conditioning on a readout value whose probability vanishes."""


class NumericError(NdweakError, ArithmeticError):
    """Quadrature did not converge or an integrand is not finite."""


class BoundaryError(NdweakError):
    """The propagated support leaves the computational grid."""


class ConsistencyError(NdweakError):
    """An internal consistency check failed (indicates a bug)."""
