"""Exception and warning types shared across the package."""


class QkdCritError(Exception):
    """Base class for all errors raised by qkdcrit."""


class NotHermitian(QkdCritError, ValueError):
    pass


class NotState(QkdCritError, ValueError):
    """Matrix fails the trace-one / positivity checks of a density operator."""


class DimensionMismatch(QkdCritError, ValueError):
    pass


class DimensionCap(QkdCritError, ValueError):
    """Requested dimension exceeds a hard cap of the dense-matrix layer."""


class OutOfRange(QkdCritError, ValueError):
    pass


class NegativeProbability(QkdCritError, ValueError):
    pass


class ConfigInvalid(QkdCritError, ValueError):
    pass


class EmptyKey(QkdCritError):
    """Sifting and sampling left no key bits."""


class UnknownSuite(QkdCritError, KeyError):
    pass


class ParseError(QkdCritError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonConvergence(UserWarning):
    """An iterative optimiser hit its budget; the returned value is an upper bound."""


class CertificateGap(UserWarning):
    """Certified lower and upper guessing bounds differ by more than the gap tolerance."""
