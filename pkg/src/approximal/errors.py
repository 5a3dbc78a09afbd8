"""Exception and warning types shared across the package."""


class ApproximalError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ApproximalError, ValueError):
    pass


class NotTight(ApproximalError, ValueError):
    """The supplied operator does not satisfy ``A* A = alpha Id``."""


class PainlessViolation(ApproximalError, ValueError):
    """Gabor parameters outside the painless case (``M < window_length``)."""


class NegativeThreshold(ApproximalError, ValueError):
    pass


class StepSizeViolation(ApproximalError, ValueError):
    """Primal-dual steps violate ``sigma * tau * ||K||^2 <= 1``."""


class FrameTooLarge(ApproximalError, ValueError):
    pass


class FractionOutOfRange(ApproximalError, ValueError):
    pass


class TooFewMissing(ApproximalError, ValueError):
    pass


class NoConvergence(UserWarning):
    """Iteration budget exhausted before the tolerance was reached.

    Emitted as a warning; the best available result is still returned.
    """


class OracleBudgetExceeded(UserWarning):
    """Oracle stopped on its iteration budget; result is best-so-far."""
