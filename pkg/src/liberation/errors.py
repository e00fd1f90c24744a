"""Exception types raised across the package."""


class LiberationError(Exception):
    """Base class for all errors raised by this package."""


class BadParameter(LiberationError, ValueError):
    pass


class MassDeficit(LiberationError, ValueError):
    """The atom at 0 is lighter than the static mass 1 - min(alpha, beta)."""


class StepFailure(LiberationError, RuntimeError):
    """The adaptive step controller underflowed."""


class DomainError(LiberationError, ValueError):
    pass


class PoleAtZ(DomainError):
    """Evaluation point coincides with an atom on the real axis."""


class BranchCut(DomainError):
    pass


class BranchAmbiguity(DomainError):
    """Discriminant too small to pick a square-root branch reliably."""


class NegativeDensity(LiberationError, ArithmeticError):
    pass


class NoConvergence(LiberationError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``last`` carries the final iterate (may be ``None``).
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class GeneralPositionViolated(LiberationError, ValueError):
    pass


class DivergentIntegral(LiberationError, ArithmeticError):
    pass


class TailDivergence(LiberationError, ArithmeticError):
    pass


class ParseError(LiberationError, ValueError):
    """Malformed measure spec; ``position`` is the offending character index."""

    def __init__(self, message, position=0):
        super().__init__(f"{message} (at position {position})")
        self.position = position
