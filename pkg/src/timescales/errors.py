"""Exception hierarchy.

Errors split into two families so the command line can map them onto
distinct exit codes: bad input data (2) versus numerical failure (3).
"""


class TimescalesError(Exception):
    """Base class for all package errors."""


class DataError(TimescalesError):
    """Input data is malformed or unusable."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(DataError):
    pass


class EmptySeriesError(DataError):
    pass


class DegenerateSeriesError(DataError):
    pass


class ParameterError(TimescalesError, ValueError):
    pass


class NumericError(TimescalesError):
    """A fit or simulation could not produce a usable result."""


class FitError(NumericError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class StabilityError(NumericError):
    pass


class InsufficientTailError(NumericError):
    pass


class UndefinedMomentError(NumericError):
    pass


class RangeError(NumericError, ValueError):
    pass
