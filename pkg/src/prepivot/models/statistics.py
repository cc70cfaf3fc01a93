"""
Statistic families ``f_eta`` and the recipes that choose ``eta`` from data.

Every family is continuous, quasi-convex, nonnegative and symmetric in ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import linalg

from ..data.population import ObservedStudy
from ..errors import ConfigError, DecompositionError, DimensionMismatchError
from .covariance import CovEstimate, neyman_unpooled, pooled, repair_pd


FAMILIES = ("abs", "quad_form", "max_abs_t", "l2_norm")
RECIPES = ("unit", "neyman_ttblock", "pooled", "diag_sqrt_neyman")

NAMED = {
    "dim": ("abs", "unit"),
    "student": ("abs", "diag_sqrt_neyman"),
    "hotelling": ("quad_form", "neyman_ttblock"),
    "hotelling-pooled": ("quad_form", "pooled"),
    "maxt": ("max_abs_t", "diag_sqrt_neyman"),
    "l2": ("l2_norm", "unit"),
}

Eta = Union[float, np.ndarray]


@dataclass(frozen=True)
class StatisticSpec:
    family: str
    xi_recipe: str = "unit"

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"Unknown statistic family {self.family!r}; expected one of {FAMILIES}")
        if self.xi_recipe not in RECIPES:
            raise ConfigError(f"Unknown recipe {self.xi_recipe!r}; expected one of {RECIPES}")

    @classmethod
    def from_name(cls, name: str) -> "StatisticSpec":
        try:
            family, recipe = NAMED[name]
        except KeyError as exc:
            raise ConfigError(f"Unknown statistic {name!r}; expected one of {sorted(NAMED)}") from exc
        return cls(family, recipe)

    @property
    def name(self) -> str:
        for label, pair in NAMED.items():
            if pair == (self.family, self.xi_recipe):
                return label
        return f"{self.family}/{self.xi_recipe}"


def compute_xi(spec: StatisticSpec, study: ObservedStudy, w, vhat: Optional[CovEstimate] = None) -> Eta:
    """Data-driven parameter for ``spec`` under assignment ``w``.

    ``vhat`` is the covariance estimate the engine already formed for ``w``;
    without it the unpooled Neyman estimator is used.
    """
    recipe = spec.xi_recipe
    if recipe == "unit":
        d = vhat.m if vhat is not None else study.outcome_dim
        if spec.family == "quad_form":
            return np.eye(d)
        if spec.family == "max_abs_t":
            return np.ones(d)
        return 1.0
    if recipe == "pooled":
        return repair_pd(pooled(study, w))[0]
    if vhat is None:
        vhat = neyman_unpooled(study, w, include_covariates=False).repair()
    tt = vhat.tt
    if recipe == "neyman_ttblock":
        return tt
    scales = np.sqrt(np.diag(tt))
    return float(scales[0]) if spec.family == "abs" else scales


def _cholesky(eta: np.ndarray):
    try:
        return linalg.cho_factor(eta)
    except linalg.LinAlgError as exc:
        raise DecompositionError("Statistic parameter is not positive definite") from exc


def evaluate_rows(spec: StatisticSpec, eta: Eta, t: np.ndarray) -> np.ndarray:
    """``f_eta`` applied to each row of ``t``."""
    t = np.atleast_2d(np.asarray(t, dtype=float))
    family = spec.family
    if family == "abs":
        if t.shape[1] != 1:
            raise DimensionMismatchError(f"The abs family needs a scalar effect, got dimension {t.shape[1]}")
        scale = float(np.asarray(eta).reshape(-1)[0])
        if not scale > 0:
            raise DecompositionError(f"Scale parameter must be positive, got {scale}")
        return np.abs(t[:, 0]) / scale
    if family == "quad_form":
        eta = np.atleast_2d(np.asarray(eta, dtype=float))
        if eta.shape != (t.shape[1], t.shape[1]):
            raise DimensionMismatchError(f"Parameter shape {eta.shape} does not match dimension {t.shape[1]}")
        solved = linalg.cho_solve(_cholesky(eta), t.T)
        return np.einsum("ij,ji->i", t, solved)
    if family == "max_abs_t":
        scales = np.asarray(eta, dtype=float).reshape(-1)
        if scales.shape[0] != t.shape[1]:
            raise DimensionMismatchError(f"{scales.shape[0]} scales for dimension {t.shape[1]}")
        if not (scales > 0).all():
            raise DecompositionError("max_abs_t scales must be positive")
        return (np.abs(t) / scales).max(axis=1)
    return np.sqrt((t * t).sum(axis=1))


def evaluate(spec: StatisticSpec, eta: Eta, t) -> float:
    """``f_eta(t)`` for a single effect vector."""
    return float(evaluate_rows(spec, eta, np.asarray(t, dtype=float).reshape(1, -1))[0])
