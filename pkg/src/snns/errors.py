"""Exception hierarchy shared across the package."""


class SnnsError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SnnsError, ValueError):
    """A caller-supplied argument is malformed or out of range."""


class NumericError(SnnsError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class GenerationError(SnnsError, RuntimeError):
    """Synthetic instance generation could not satisfy its invariants."""


class FormatError(SnnsError, ValueError):
    """A file does not conform to its declared format."""


class IngestError(SnnsError, RuntimeError):
    """A dataset could not be turned into benchmark instances."""


class SweepError(SnnsError, RuntimeError):
    """An experiment sweep violated one of its preconditions."""
