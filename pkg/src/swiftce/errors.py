class SwiftError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(SwiftError, ValueError):
    pass


class ProtocolError(SwiftError):
    """Measurement records supplied out of order."""


class EstimatorError(SwiftError, ArithmeticError):
    """GAMP produced non-finite values."""
