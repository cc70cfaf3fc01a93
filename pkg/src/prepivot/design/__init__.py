"""Assignment spaces and balance criteria."""

from .balance import BalanceCriterion, accepts, covariate_metric, is_balanced, validate_custom
from .spaces import DESIGNS, AssignmentSpace, pair_members

__all__ = [
    "AssignmentSpace",
    "BalanceCriterion",
    "DESIGNS",
    "accepts",
    "covariate_metric",
    "is_balanced",
    "pair_members",
    "validate_custom",
]
