"""Exception types shared across the package."""


class SpecsegError(Exception):
    """Base class for all specseg errors."""


class ParseError(SpecsegError):
    """A cell of an input file could not be parsed as a number."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ShapeError(SpecsegError):
    """Array dimensions are inconsistent (ragged file, mismatched operands)."""


class DimensionError(SpecsegError):
    """Data dimensions are below the minimum the method requires."""


class ConfigError(SpecsegError):
    """A configuration value is out of range or inconsistent."""


class IntervalError(SpecsegError):
    """A block interval is empty or inverted."""


class NumericalError(SpecsegError):
    """A computation produced non-finite intermediates."""


class InputError(SpecsegError):
    """Generic invalid input to an evaluation or plumbing routine."""


class DegenerateTensorError(SpecsegError):
    """An all-zero tensor cannot seed a projection; callers substitute a
    random sparse unit vector."""
