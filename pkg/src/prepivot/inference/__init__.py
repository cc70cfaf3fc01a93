"""Gaussian prepivoting, the randomization test engine, and confidence sets."""

from .confidence import ConfidenceSet, confidence_set, parse_grid
from .frt import (
    FRTConfig,
    ReferenceDistribution,
    TestReport,
    ks_distance,
    oracle_randomization_distribution,
    randomization_test,
    raw_statistic_test,
)
from .pushforward import (
    GaussEngineConfig,
    PrepivotValue,
    gaussian_factor,
    gaussian_tail,
    prepivot_assignment,
    pushforward_cdf,
    statistic_for_assignment,
)

__all__ = [
    "ConfidenceSet",
    "FRTConfig",
    "GaussEngineConfig",
    "PrepivotValue",
    "ReferenceDistribution",
    "TestReport",
    "confidence_set",
    "gaussian_factor",
    "gaussian_tail",
    "ks_distance",
    "oracle_randomization_distribution",
    "parse_grid",
    "prepivot_assignment",
    "pushforward_cdf",
    "randomization_test",
    "raw_statistic_test",
    "statistic_for_assignment",
]
