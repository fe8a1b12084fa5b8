"""Exception hierarchy shared across the package."""


class FlexsumError(Exception):
    """Base class for all package-specific errors."""


class LPNumericalError(FlexsumError):
    """The LP solver hit its pivot cap or produced an inconsistent tableau."""


class EmptyPolytopeError(FlexsumError):
    """An operation required a non-empty polytope."""


class UnboundedPolytopeError(FlexsumError):
    """An operation required a bounded polytope."""


class DegenerateGeometryError(FlexsumError):
    """The input set is lower-dimensional (zero volume) where full dimension is required."""


class InfeasibleModelError(FlexsumError):
    """Device parameters describe an empty feasible set."""


class ScenarioError(FlexsumError):
    """A scenario file violates the schema."""
