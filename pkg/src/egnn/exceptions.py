"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class MaskError(ValueError):
    """A vertex mask excludes every row it is supposed to cover."""


class DatasetFormatError(ValueError):
    """A dataset file is missing, truncated, or fails to parse."""


class FixedSizeError(ValueError):
    """A layer requiring graphs of one fixed size received another size."""


class ArchitectureError(ValueError):
    """An architecture string fails to parse or to validate."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


class OracleError(RuntimeError):
    """The finite-difference oracle hit a non-finite evaluation."""
