"""Exception types shared across the package."""


class CityformError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CityformError):
    """Bad configuration or arguments, caught before any real computation."""


class DataError(CityformError):
    """Malformed or internally inconsistent input data."""


class EmptyCityError(DataError):
    """A city network with no nodes where a non-empty one is required."""


class DegenerateGeometryError(DataError):
    """Geometry too degenerate to define a direction or an angle."""
