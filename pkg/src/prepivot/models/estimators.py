"""
Point estimators fed to the statistic layer.

Every estimator returns an unscaled estimate; ``EstimatorSpec.estimate`` also
returns the scale (N, or the pair count for paired designs) whose square root
the engine multiplies in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import statsmodels.api as sm

from ..data.population import ObservedStudy, difference_in_means
from ..design.spaces import pair_members
from ..errors import (
    DimensionMismatchError,
    InvalidContrastError,
    InvalidDesignError,
    SingularRegressionError,
)
from ..utils import get_logger


logger = get_logger(__name__)

KINDS = ("dim", "lin_adjusted", "paired", "contrast")


def validate_contrasts(contrasts, n_arms: Optional[int] = None) -> np.ndarray:
    """Return the contrast matrix (A rows, one column per contrast) after checking each column."""
    matrix = np.array(contrasts, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2 or matrix.shape[1] < 1:
        raise InvalidContrastError(f"Contrast matrix must be A x d', got shape {matrix.shape}")
    if n_arms is not None and matrix.shape[0] != n_arms:
        raise InvalidContrastError(f"Contrast matrix has {matrix.shape[0]} rows for {n_arms} arms")
    sums = matrix.sum(axis=0)
    scale = np.abs(matrix).sum(axis=0)
    for j in range(matrix.shape[1]):
        if scale[j] == 0:
            raise InvalidContrastError(f"Contrast column {j} is identically zero")
        if abs(sums[j]) > 1e-12 * scale[j]:
            raise InvalidContrastError(f"Contrast column {j} sums to {sums[j]:g}, expected 0")
    matrix.flags.writeable = False
    return matrix


@dataclass(frozen=True, eq=False)
class EstimatorSpec:
    kind: str = "dim"
    contrasts: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidDesignError(f"Unknown estimator {self.kind!r}; expected one of {KINDS}")
        if self.kind == "contrast":
            if self.contrasts is None:
                raise InvalidContrastError("Contrast estimators need a contrast matrix")
            object.__setattr__(self, "contrasts", validate_contrasts(self.contrasts))

    def scale(self, study: ObservedStudy) -> int:
        if self.kind == "paired":
            return len(pair_members(study.pairs, study.n_units))
        return study.n_units

    def estimate(self, study: ObservedStudy, w) -> Tuple[np.ndarray, int]:
        """Unscaled estimate under assignment ``w`` and the engine's scale."""
        if self.kind == "dim":
            value = tau_hat(study, w)
        elif self.kind == "lin_adjusted":
            value = tau_hat_reg_columns(study, w)
        elif self.kind == "paired":
            value = tau_hat_paired(study, w)
        else:
            value = tau_hat_contrast(study, w, self.contrasts)
        return value, self.scale(study)

    def to_dict(self) -> dict:
        payload: dict = {"kind": self.kind}
        if self.contrasts is not None:
            payload["contrasts"] = self.contrasts.tolist()
        return payload


def tau_hat(study: ObservedStudy, w) -> np.ndarray:
    return difference_in_means(study.outcomes, w)


def delta_hat(study: ObservedStudy, w) -> np.ndarray:
    """Covariate imbalance; an empty vector when the study has no covariates."""
    if study.covariate_dim == 0:
        return np.zeros(0)
    return difference_in_means(study.covariates, w)


@dataclass(frozen=True)
class RegressionFit:
    """Interacted OLS of one outcome on treatment, centered covariates, and their product."""

    coefficient: float
    slope_treated: np.ndarray
    slope_control: np.ndarray
    residuals: np.ndarray
    adjusted: np.ndarray
    rsquared: float


def fit_lin(outcome: np.ndarray, covariates: np.ndarray, w) -> RegressionFit:
    """Fit ``y ~ 1 + W + (x - xbar) + W (x - xbar)`` with statsmodels OLS.

    ``adjusted`` holds ``y_i - (x_i - xbar)' Q_{w_i}`` with arm slopes ``Q``;
    its difference in means equals the treatment coefficient.
    """
    y = np.asarray(outcome, dtype=float).reshape(-1)
    w = np.asarray(w).astype(float)
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    k_all = x.shape[1]
    # constant covariates carry no information once centered
    informative = np.ptp(x, axis=0) > 0 if k_all else np.zeros(0, dtype=bool)
    x = x[:, informative]
    k = x.shape[1]
    if k < k_all:
        logger.debug("Dropped %d constant covariate(s) before the interacted fit", k_all - k)
    n1 = int(w.sum())
    n0 = w.size - n1
    if min(n1, n0) < k + 2:
        raise SingularRegressionError(
            f"Regression adjustment with k={k} covariates needs at least {k + 2} units per arm, "
            f"got n1={n1}, n0={n0}"
        )

    centered = x - x.mean(axis=0)
    design = np.column_stack([np.ones_like(y), w, centered, w[:, None] * centered])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularRegressionError("Interacted regression design matrix is rank deficient")

    model = sm.OLS(y, design).fit()
    params = np.asarray(model.params)
    slope_control = np.zeros(k_all)
    slope_treated = np.zeros(k_all)
    slope_control[informative] = params[2 : 2 + k]
    slope_treated[informative] = params[2 : 2 + k] + params[2 + k :]
    fitted_slopes = np.where(w[:, None] == 1, slope_treated[None, :], slope_control[None, :])
    adjusted = y - (centered * fitted_slopes[:, informative]).sum(axis=1)
    return RegressionFit(
        coefficient=float(params[1]),
        slope_treated=slope_treated,
        slope_control=slope_control,
        residuals=np.asarray(model.resid),
        adjusted=adjusted,
        rsquared=float(model.rsquared) if np.isfinite(model.rsquared) else 0.0,
    )


def lin_fit(study: ObservedStudy, w, column: int = 0) -> RegressionFit:
    return fit_lin(study.outcomes[:, column], study.covariates, w)


def tau_hat_reg(study: ObservedStudy, w) -> float:
    """Regression-adjusted effect for a univariate outcome."""
    if study.outcome_dim != 1:
        raise DimensionMismatchError(
            f"tau_hat_reg needs a univariate outcome, got d={study.outcome_dim}; use tau_hat_reg_columns"
        )
    return lin_fit(study, w).coefficient


def tau_hat_reg_columns(study: ObservedStudy, w) -> np.ndarray:
    """Column-by-column regression adjustment for multivariate outcomes."""
    return np.array([lin_fit(study, w, j).coefficient for j in range(study.outcome_dim)])


def pair_differences(study: ObservedStudy, w) -> np.ndarray:
    """Treated-minus-control outcome differences, one row per pair."""
    w = np.asarray(w)
    members = pair_members(study.pairs, study.n_units)
    rows = []
    for i, j in members:
        if w[i] + w[j] != 1:
            raise InvalidDesignError(f"Pair ({i}, {j}) must have exactly one treated unit under w")
        treated, control = (i, j) if w[i] == 1 else (j, i)
        rows.append(study.outcomes[treated] - study.outcomes[control])
    return np.array(rows)


def tau_hat_paired(study: ObservedStudy, w) -> np.ndarray:
    return pair_differences(study, w).mean(axis=0)


def arm_means(study: ObservedStudy, w, n_arms: Optional[int] = None) -> np.ndarray:
    """Arm-mean matrix with one column per arm (d x A)."""
    w = np.asarray(w).astype(int)
    n_arms = n_arms or study.n_arms
    counts = np.bincount(w, minlength=n_arms)
    if (counts == 0).any():
        raise InvalidDesignError(f"Every arm needs at least one unit, got arm sizes {counts.tolist()}")
    sums = np.zeros((n_arms, study.outcome_dim))
    np.add.at(sums, w, study.outcomes)
    return (sums / counts[:, None]).T


def tau_hat_contrast(study: ObservedStudy, w, contrasts) -> np.ndarray:
    """Column-major ``vec`` of arm means times contrasts."""
    matrix = validate_contrasts(contrasts)
    means = arm_means(study, w, n_arms=matrix.shape[0])
    return (means @ matrix).flatten(order="F")
