"""Covariance estimators for the scaled (tau_hat, delta_hat) vector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from ..data.population import ObservedStudy
from ..errors import VarianceUndefinedError
from ..utils import get_logger
from .estimators import fit_lin, pair_differences, validate_contrasts


logger = get_logger(__name__)

REPAIR_RELATIVE_FLOOR = 1e-10


@dataclass(frozen=True)
class CovEstimate:
    """Joint covariance with the ``m`` effect coordinates first, then ``k`` covariate coordinates."""

    v: np.ndarray
    m: int
    k: int = 0
    repaired: bool = False
    floor: float = 0.0

    @property
    def tt(self) -> np.ndarray:
        return self.v[: self.m, : self.m]

    @property
    def td(self) -> np.ndarray:
        return self.v[: self.m, self.m :]

    @property
    def dd(self) -> np.ndarray:
        return self.v[self.m :, self.m :]

    def repair(self) -> "CovEstimate":
        v, repaired, floor = repair_pd(self.v)
        if not repaired:
            return self
        return CovEstimate(v=v, m=self.m, k=self.k, repaired=True, floor=floor)


def repair_pd(matrix: np.ndarray) -> Tuple[np.ndarray, bool, float]:
    """Floor eigenvalues at ``1e-10 * trace / dim`` so the matrix factors stably.

    Returns the (possibly) repaired matrix, whether a repair was needed, and the floor.
    """
    v = np.atleast_2d(np.asarray(matrix, dtype=float))
    v = (v + v.T) / 2.0
    dim = v.shape[0]
    trace = float(np.trace(v))
    floor = REPAIR_RELATIVE_FLOOR * trace / dim if trace > 0 else REPAIR_RELATIVE_FLOOR
    values, vectors = linalg.eigh(v)
    if values.min() >= floor:
        return np.atleast_2d(np.asarray(matrix, dtype=float)), False, floor
    logger.debug("Repairing covariance: min eigenvalue %.3e below floor %.3e", values.min(), floor)
    clipped = np.maximum(values, floor)
    repaired = (vectors * clipped) @ vectors.T
    return (repaired + repaired.T) / 2.0, True, floor


def _arm_cov(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    return (a - a.mean(axis=0)).T @ (b - b.mean(axis=0)) / (n - 1)


def _arms(w, min_size: int = 2) -> Tuple[np.ndarray, int, int]:
    treated = np.asarray(w) == 1
    n1 = int(treated.sum())
    n0 = treated.size - n1
    if min(n1, n0) < min_size:
        raise VarianceUndefinedError(f"Each arm needs at least {min_size} units, got n1={n1}, n0={n0}")
    return treated, n1, n0


def neyman_unpooled(
    study: ObservedStudy,
    w,
    outcomes: Optional[np.ndarray] = None,
    include_covariates: bool = True,
) -> CovEstimate:
    """Unpooled Neyman estimator, ``N (S1/n1 + S0/n0)`` blockwise over (outcomes, covariates)."""
    y = study.outcomes if outcomes is None else np.asarray(outcomes, dtype=float).reshape(study.n_units, -1)
    x = study.covariates if include_covariates else np.zeros((study.n_units, 0))
    treated, n1, n0 = _arms(w)
    n = study.n_units
    joint = np.hstack([y, x])
    v = n * (_arm_cov(joint[treated], joint[treated]) / n1 + _arm_cov(joint[~treated], joint[~treated]) / n0)
    return CovEstimate(v=(v + v.T) / 2.0, m=y.shape[1], k=x.shape[1])


def pooled(study: ObservedStudy, w) -> np.ndarray:
    """Pooled two-sample covariance scaled by ``N/n0 + N/n1``."""
    n = study.n_units
    if n < 3:
        raise VarianceUndefinedError(f"Pooled covariance needs N >= 3, got {n}")
    treated, n1, n0 = _arms(w)
    y = study.outcomes
    within = ((n1 - 1) * _arm_cov(y[treated], y[treated]) + (n0 - 1) * _arm_cov(y[~treated], y[~treated])) / (n - 2)
    return (n / n0 + n / n1) * within


def regression_covariance(study: ObservedStudy, w, include_covariates: bool = True) -> CovEstimate:
    """Neyman estimator applied to interacted-OLS residuals, one regression per outcome column."""
    residuals = np.column_stack(
        [fit_lin(study.outcomes[:, j], study.covariates, w).residuals for j in range(study.outcome_dim)]
    )
    return neyman_unpooled(study, w, outcomes=residuals, include_covariates=include_covariates)


def regression_residual(study: ObservedStudy, w) -> float:
    """``N/n1 s1^2 + N/n0 s0^2`` over the residuals of the interacted regression."""
    return float(regression_covariance(study, w, include_covariates=False).tt[0, 0])


def paired_neyman(study: ObservedStudy, w) -> np.ndarray:
    """Sample covariance (divisor I-1) of the pair differences."""
    diffs = pair_differences(study, w)
    if diffs.shape[0] < 2:
        raise VarianceUndefinedError(f"Paired variance needs at least two pairs, got {diffs.shape[0]}")
    return _arm_cov(diffs, diffs)


def multiarm_contrast(study: ObservedStudy, w, contrasts) -> np.ndarray:
    """Sandwich ``(C' kron I) D (C' kron I)'`` with ``D`` the direct sum of ``(N/n_a) S_a``."""
    matrix = validate_contrasts(contrasts)
    w = np.asarray(w).astype(int)
    n = study.n_units
    blocks = []
    for arm in range(matrix.shape[0]):
        members = study.outcomes[w == arm]
        if members.shape[0] < 2:
            raise VarianceUndefinedError(f"Arm {arm} needs at least two units, got {members.shape[0]}")
        blocks.append(n / members.shape[0] * _arm_cov(members, members))
    direct_sum = linalg.block_diag(*blocks)
    transform = np.kron(matrix.T, np.eye(study.outcome_dim))
    v = transform @ direct_sum @ transform.T
    return (v + v.T) / 2.0


def estimate_covariance(estimator, study: ObservedStudy, w, include_covariates: bool = False) -> CovEstimate:
    """The covariance estimator matching ``estimator``, repaired for factorization.

    Covariate blocks are only included for two-arm estimators when requested.
    """
    kind = estimator.kind
    if kind == "dim":
        cov = neyman_unpooled(study, w, include_covariates=include_covariates)
    elif kind == "lin_adjusted":
        cov = regression_covariance(study, w, include_covariates=include_covariates)
    elif kind == "paired":
        v = paired_neyman(study, w)
        cov = CovEstimate(v=v, m=v.shape[0])
    else:
        v = multiarm_contrast(study, w, estimator.contrasts)
        cov = CovEstimate(v=v, m=v.shape[0])
    return cov.repair()
