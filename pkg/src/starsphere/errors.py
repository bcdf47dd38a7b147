"""Exception types raised by starsphere."""


class StarSphereError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(StarSphereError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateGeometryError(StarSphereError):
    """A simplex has (numerically) zero volume."""


class DegenerateContourError(StarSphereError):
    """The contour integrates to zero, so no norming constant exists."""


class NumericDomainError(StarSphereError, ArithmeticError):
    """A numerical evaluation produced NaN or an unbounded value."""


class UnsupportedFormatError(StarSphereError, ValueError):
    """Export format not available for the mesh dimension."""
