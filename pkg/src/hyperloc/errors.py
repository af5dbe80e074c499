"""Exception hierarchy shared by every module of the package."""


class HyperlocError(Exception):
    """Base class for all errors raised by :mod:`hyperloc`."""


class DimensionMismatch(HyperlocError, ValueError):
    pass


class DegenerateWeight(HyperlocError, ValueError):
    """A weight vanishes identically or on the polarization vector."""

    def __init__(self, message, weight=None):
        super().__init__(message)
        self.weight = weight


class ConeEmpty(HyperlocError, ValueError):
    pass


class PoleError(HyperlocError, ArithmeticError):
    """Evaluation hit (or came too close to) the polar locus of an expression.

    ``denominator`` is the sub-expression whose value vanished and
    ``value`` its magnitude at the offending point.
    """

    def __init__(self, message, denominator=None, value=None):
        super().__init__(message)
        self.denominator = denominator
        self.value = value


class InternalError(HyperlocError, RuntimeError):
    pass


class ProductUndefined(HyperlocError, ValueError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ConvergenceError(HyperlocError, ArithmeticError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class EvaluationBlocked(HyperlocError, ArithmeticError):
    pass


class ContourBlocked(HyperlocError, ArithmeticError):
    pass


class NotIntegrable(HyperlocError, ArithmeticError):
    pass


class Unsupported(HyperlocError, ValueError):
    pass


class NotSlowlyIncreasing(HyperlocError, ValueError):
    pass


class NoPeriodicSolution(HyperlocError, ValueError):
    pass


class TrivialCase(HyperlocError, ValueError):
    pass
