"""Point estimators, covariance estimators and statistic families."""

from .covariance import (
    CovEstimate,
    estimate_covariance,
    multiarm_contrast,
    neyman_unpooled,
    paired_neyman,
    pooled,
    regression_covariance,
    regression_residual,
    repair_pd,
)
from .estimators import (
    EstimatorSpec,
    RegressionFit,
    arm_means,
    delta_hat,
    fit_lin,
    lin_fit,
    pair_differences,
    tau_hat,
    tau_hat_contrast,
    tau_hat_paired,
    tau_hat_reg,
    tau_hat_reg_columns,
    validate_contrasts,
)
from .statistics import NAMED, StatisticSpec, compute_xi, evaluate, evaluate_rows

__all__ = [
    "CovEstimate",
    "EstimatorSpec",
    "NAMED",
    "RegressionFit",
    "StatisticSpec",
    "arm_means",
    "compute_xi",
    "delta_hat",
    "estimate_covariance",
    "evaluate",
    "evaluate_rows",
    "fit_lin",
    "lin_fit",
    "multiarm_contrast",
    "neyman_unpooled",
    "pair_differences",
    "paired_neyman",
    "pooled",
    "regression_covariance",
    "regression_residual",
    "repair_pd",
    "tau_hat",
    "tau_hat_contrast",
    "tau_hat_paired",
    "tau_hat_reg",
    "tau_hat_reg_columns",
    "validate_contrasts",
]
