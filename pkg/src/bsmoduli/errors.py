"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for geometric / numerical failures."""


class DegenerateLoop(GeometryError):
    """A loop has (nearly) coincident consecutive samples or a collapsed tangent."""


class NonContractibleLoop(GeometryError):
    """Holonomy requested for a torus loop with nonzero winding numbers."""


class AreaTooSmall(GeometryError):
    """Loop action too close to zero to rescale onto an integer level."""


class SingularPairing(GeometryError):
    """The tangent-space pairing matrix is numerically singular."""


class NewtonDivergence(GeometryError):
    """Implicit-step Newton iteration failed to converge."""


class PrequantizationError(GeometryError):
    """Surface does not satisfy the integrality condition required for holonomy levels."""


class ExpressionError(ValueError):
    """Malformed scalar-field expression."""
