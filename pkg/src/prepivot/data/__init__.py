"""Finite-population data model and study ingestion."""

from .loaders import load_study, write_study
from .population import (
    FinitePopulation,
    MomentSet,
    ObservedStudy,
    OracleCovariances,
    as_matrix,
    difference_in_means,
    impute_sharp_null,
    oracle_covariances,
    population_moments,
)
from .validators import validate_study_frame

__all__ = [
    "FinitePopulation",
    "MomentSet",
    "ObservedStudy",
    "OracleCovariances",
    "as_matrix",
    "difference_in_means",
    "impute_sharp_null",
    "load_study",
    "oracle_covariances",
    "population_moments",
    "validate_study_frame",
    "write_study",
]
