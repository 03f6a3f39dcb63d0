"""Exception and warning types shared across the package."""


class ShapeError(ValueError):
    """Array shapes are incompatible with the requested operation."""


class ParameterError(ValueError):
    """A parameter value is outside its valid domain."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value."""


class NumericWarning(RuntimeWarning):
    """A computation finished but lost information (e.g. a discarded imaginary part)."""


class InputError(Exception):
    """User supplied data that cannot be processed (empty dataset, mismatched files)."""


class VersionError(Exception):
    """A checkpoint or config file has an unsupported format version or mismatched layout."""
