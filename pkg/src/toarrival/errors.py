"""Exception and warning types raised by the library."""


class ToArrivalError(Exception):
    """Base class for all library errors."""


class PoleError(ToArrivalError, ValueError):
    """Gamma function evaluated at a non-positive integer."""


class AccuracyError(ToArrivalError, ArithmeticError):
    """A requested accuracy could not be reached by the selected regime."""


class NonConvergenceError(ToArrivalError, ArithmeticError):
    """A series or refinement sequence failed to converge."""


class ToleranceNotMet(ToArrivalError, ArithmeticError):
    """Adaptive quadrature stopped before reaching the tolerance.

    The best available estimate is kept on ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DomainError(ToArrivalError, ValueError):
    """State outside the domain of the time-of-arrival operator."""


class OracleQuarantineError(ToArrivalError, RuntimeError):
    """Slow reference integrator called without ``slow=True``."""


class GridTooNarrowWarning(UserWarning):
    """Time grid misses more arrival probability than requested."""

    def __init__(self, message, missing_norm=float("nan")):
        super().__init__(message)
        self.missing_norm = missing_norm
