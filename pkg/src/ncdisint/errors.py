"""Exception types raised by the library."""


class NcDisintError(ValueError):
    """Base class for all library errors."""


class DimensionError(NcDisintError):
    """Operands have incompatible shapes or block structure."""


class NotHermitianError(NcDisintError):
    """A matrix expected to be Hermitian is not, within tolerance."""


class AlgebraMismatch(NcDisintError):
    """An element, state or map lives on a different algebra than expected."""


class InvalidStateError(NcDisintError):
    """Weights or density matrices do not describe a state."""


class InvalidMapError(NcDisintError):
    """A map fails a structural precondition (CP, unitality, hom data)."""


class IllPosedProblem(NcDisintError):
    """The induced state does not match the pullback of the target state."""
