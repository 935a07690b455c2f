"""Exception types raised across the package."""


class CellDiscoveryError(Exception):
    pass


class InvalidDimensionError(CellDiscoveryError, ValueError):
    pass


class DimensionMismatchError(CellDiscoveryError, ValueError):
    pass


class InfeasibleSupportError(CellDiscoveryError, ValueError):
    pass


class DegenerateGeometryError(CellDiscoveryError, ValueError):
    pass


class UnsupportedDimensionError(CellDiscoveryError, ValueError):
    """Raised when a MUB family is requested for a non prime-power dimension."""


class FamilySizeError(CellDiscoveryError, ValueError):
    pass


class InvalidPartitionError(CellDiscoveryError, ValueError):
    pass


class CapacityExceededError(CellDiscoveryError, ValueError):
    pass


class DegenerateMatrixError(CellDiscoveryError, ValueError):
    pass


class NumericalFailureError(CellDiscoveryError, ArithmeticError):
    pass


class CalibrationError(CellDiscoveryError, RuntimeError):
    """The requested false-alarm rate cannot be reached by any threshold."""

    def __init__(self, message, *, r_value=None, atom=None):
        super().__init__(message)
        self.r_value = r_value
        self.atom = atom


class ConfigError(CellDiscoveryError, ValueError):
    pass
