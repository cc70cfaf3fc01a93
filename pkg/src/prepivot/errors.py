"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations

import numpy as np


class PrepivotError(Exception):
    """Base class for all errors raised by the package."""


class SchemaError(PrepivotError, ValueError):
    """Input table does not follow the study CSV schema."""


class ConfigError(PrepivotError, ValueError):
    """Invalid run configuration or flag combination."""


class InvalidDesignError(PrepivotError, ValueError):
    """Assignment vector or design declaration is degenerate or malformed."""


class DimensionMismatchError(PrepivotError, ValueError):
    """Vector or matrix dimensions disagree with the study."""


class EnumerationTooLargeError(PrepivotError, ValueError):
    """The assignment space is larger than the enumeration cap."""


class InfeasibleBalanceError(PrepivotError, RuntimeError):
    """Rejection sampling could not find a balanced assignment."""

    def __init__(self, message: str, accepted: int, attempts: int) -> None:
        super().__init__(message)
        self.accepted = accepted
        self.attempts = attempts

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else 0.0


class DecompositionError(PrepivotError, np.linalg.LinAlgError):
    """A matrix expected to be positive definite is not."""


class SingularRegressionError(PrepivotError, np.linalg.LinAlgError):
    """The interacted regression design matrix is rank deficient."""


class VarianceUndefinedError(PrepivotError, ValueError):
    """Too few units (or pairs) to form a sample variance."""


class InvalidContrastError(PrepivotError, ValueError):
    """A contrast column does not sum to zero or is identically zero."""


class BalanceMassError(PrepivotError, RuntimeError):
    """No Gaussian draw landed in the balance acceptance set."""


__all__ = [
    "PrepivotError",
    "SchemaError",
    "ConfigError",
    "InvalidDesignError",
    "DimensionMismatchError",
    "EnumerationTooLargeError",
    "InfeasibleBalanceError",
    "DecompositionError",
    "SingularRegressionError",
    "VarianceUndefinedError",
    "InvalidContrastError",
    "BalanceMassError",
]
