"""Exception types raised by adadiff."""


class AdaDiffError(Exception):
    """Base class for all errors raised by this package."""


class SignatureMismatch(AdaDiffError, ValueError):
    """Two block vectors (or a vector and a metric) have different block layouts."""


class DomainError(AdaDiffError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedConfiguration(AdaDiffError, ValueError):
    """The requested combination of options is not implemented."""


class ConfigurationError(AdaDiffError, ValueError):
    """Invalid solver or experiment configuration."""


class NumericalError(AdaDiffError, ArithmeticError):
    """A non-finite value appeared during an iteration."""


class DivergenceError(NumericalError):
    """A solver run produced a non-finite iterate.

    The partially filled trace is attached as ``trace`` so callers can
    inspect the run up to the failure.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ParseError(AdaDiffError, ValueError):
    """Malformed LIBSVM input. ``lineno`` is 1-based."""

    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EstimationError(AdaDiffError, RuntimeError):
    """No finite objective value was observed while estimating F*."""
