"""Exception types shared across the toolkit."""


class CoapproxError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(CoapproxError, ValueError):
    pass


class ZeroVector(CoapproxError, ValueError):
    pass


class ZeroFunctional(CoapproxError, ValueError):
    pass


class NotSmooth(CoapproxError):
    """The norm (or gauge) has no unique supporting functional at the point."""

    def __init__(self, message, point=None, jump=None):
        super().__init__(message)
        self.point = point
        self.jump = jump


class NotOnBoundary(CoapproxError, ValueError):
    pass


class NoSmoothPoints(CoapproxError):
    pass


class InvalidBody(CoapproxError, ValueError):
    pass


class NotCertified(CoapproxError):
    """A projection failed its norm-one certificate."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NotFound(CoapproxError):
    """No norm-one kernel projection was found.

    ``estimate`` is the smallest sampled operator norm attained during the
    search and ``y`` the corresponding direction.
    """

    def __init__(self, message, estimate, y=None):
        super().__init__(message)
        self.estimate = estimate
        self.y = y


class SelectionInvalid(CoapproxError):
    pass


class MaxIterExceeded(CoapproxError):
    """Iteration budget spent before the residual reached tolerance.

    Carries the last iterate so callers can still inspect it.
    """

    def __init__(self, message, point, iterations, residual):
        super().__init__(message)
        self.point = point
        self.iterations = iterations
        self.residual = residual


class SearchExhausted(CoapproxError):
    pass
