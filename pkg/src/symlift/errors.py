"""Exception types shared across the package."""

from __future__ import annotations


class NumericDomainError(ArithmeticError):
    """An evaluator produced a non-finite value or a map was not invertible."""


class ChartMismatchError(ValueError):
    """A form, map or point lives on a different chart than required."""


class SingularFormError(ArithmeticError):
    """A two-form that must be nondegenerate is (numerically) singular."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class NotFiberedError(ValueError):
    """A map expected to preserve the projection moves base points."""


class IllDefinedError(ValueError):
    """A quantity expected to be independent of the fiber probe is not."""


class NotClosedError(ValueError):
    """A form required to be closed has a nonzero exterior derivative."""


class NotLagrangianError(ValueError):
    """A section required to be Lagrangian pulls the symplectic form back to nonzero."""


class NotTransitiveError(ValueError):
    """The action lacks the simply-transitive structure an operation requires."""
