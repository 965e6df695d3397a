"""Exception types shared across the package."""


class LognitionError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LognitionError):
    """Malformed identifier or record syntax."""


class RangeError(LognitionError):
    """A parsed field is syntactically valid but outside the allowed range."""


class UnknownTypeError(LognitionError):
    """Referenced event type is not registered with the store."""


class MalformedCaptureError(LognitionError):
    """A log line matched a pattern but a required capture could not be decoded."""


class ArgumentError(LognitionError, ValueError):
    """Invalid argument to a query or analytics operation."""


class InsufficientDataError(LognitionError):
    """Not enough data to compute the requested statistic."""
