"""Exception types raised by stencilkit.

Every misuse the library detects is reported through one of these classes,
all deriving from :class:`StencilError`, so callers can catch library errors
without catching unrelated ones.
"""


class StencilError(Exception):
    """Base class of every error raised by the library."""


class InvalidDomain(StencilError, ValueError):
    pass


class UnsupportedDimension(StencilError, ValueError):
    pass


class OutOfBounds(StencilError, IndexError):
    pass


class HaloViolation(StencilError, IndexError):
    """An offset read reaches past the grid halo or the operator footprint."""


class ShapeMismatch(StencilError, ValueError):
    pass


class AccessModeViolation(StencilError):
    """A grid was touched in a way its declared access mode forbids."""


class FusionArityMismatch(StencilError, ValueError):
    pass


class FusionConflict(StencilError, ValueError):
    """The second operator of a fusion reads the first one's output off-center."""


class ArityMismatch(StencilError, ValueError):
    pass


class InvalidAxis(StencilError, ValueError):
    pass


class ContextViolation(StencilError):
    """Direct data access inside a context, or an iteration space outside one."""


class PhaseViolation(StencilError):
    """Library lifecycle call made in the wrong phase."""


class InvalidHierarchy(StencilError, ValueError):
    pass


class StorageMismatch(StencilError):
    pass


class InvalidWorkerCount(StencilError, ValueError):
    pass


class OverDecomposed(StencilError, ValueError):
    pass


class DecompositionMismatch(StencilError):
    pass


class UnsupportedVariantArch(StencilError):
    pass


class IoError(StencilError, OSError):
    pass
