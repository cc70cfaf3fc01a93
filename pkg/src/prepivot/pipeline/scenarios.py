"""Generative models for the simulation studies."""

from __future__ import annotations

from typing import Union

import numpy as np

from ..data.population import FinitePopulation
from ..design.balance import BalanceCriterion
from ..errors import ConfigError


TABLE1_CORRELATION = np.array(
    [
        [1.0, 0.8, 0.2],
        [0.8, 1.0, 0.3],
        [0.2, 0.3, 1.0],
    ]
)
TABLE1_BETA_CONTROL = np.array([-6.4, 4.0, 2.4])
TABLE1_BETA_TREATED = np.array([0.2, 0.4, 0.6])
TREATED_FRACTION = 0.2

TABLE2_DIM = 25
TABLE2_RHO_TREATED = 0.0
TABLE2_RHO_CONTROL = 0.95
DEFAULT_EFFECT = 0.05

EFFECTS = ("sharp", "weak", "constant", "heterogeneous")


def equicorrelation(dim: int, rho: float) -> np.ndarray:
    return (1.0 - rho) * np.eye(dim) + rho * np.ones((dim, dim))


def _assemble(r1: np.ndarray, r0: np.ndarray, x: np.ndarray, effect: str, tau: np.ndarray) -> FinitePopulation:
    if effect == "sharp":
        return FinitePopulation(y1=r1, y0=r1, x=x)
    if effect == "weak":
        return FinitePopulation(y1=r1, y0=r0 - r0.mean(axis=0) + r1.mean(axis=0), x=x)
    if effect == "constant":
        return FinitePopulation(y1=r1 + tau, y0=r1, x=x)
    if effect == "heterogeneous":
        return FinitePopulation(y1=r1, y0=r0 - r0.mean(axis=0) + r1.mean(axis=0) - tau, x=x)
    raise ConfigError(f"Unknown effect {effect!r}; expected one of {EFFECTS}")


def generate_table1_population(
    n_units: int,
    rng: np.random.Generator,
    effect: str = "weak",
    tau: Union[float, np.ndarray] = 0.0,
) -> FinitePopulation:
    """Three correlated Gaussian covariates, outcomes linear in them plus skewed noise.

    Control noise is ``1 - Exp(1)`` and treated noise ``10 - Exp(mean 10)``,
    both mean zero. ``weak`` recenters controls so the average effect is zero;
    ``sharp`` sets both potential outcomes to the treated response.
    """
    if n_units < 10:
        raise ConfigError(f"Simulation populations need N >= 10, got {n_units}")
    x = rng.multivariate_normal(np.zeros(3), TABLE1_CORRELATION, size=n_units, method="cholesky")
    eps0 = 1.0 - rng.exponential(1.0, size=n_units)
    eps1 = 10.0 - rng.exponential(10.0, size=n_units)
    r0 = (x @ TABLE1_BETA_CONTROL + eps0).reshape(-1, 1)
    r1 = (x @ TABLE1_BETA_TREATED + eps1).reshape(-1, 1)
    return _assemble(r1, r0, x, effect, np.atleast_1d(tau))


def table1_metric(treated_fraction: float = TREATED_FRACTION) -> np.ndarray:
    """Population covariance of ``sqrt(N) delta_hat`` for the three-covariate model."""
    return TABLE1_CORRELATION / (treated_fraction * (1.0 - treated_fraction))


def table1_criterion(threshold: float = 1.0, treated_fraction: float = TREATED_FRACTION) -> BalanceCriterion:
    return BalanceCriterion.mahalanobis(threshold, table1_metric(treated_fraction))


def generate_table2_population(
    n_units: int,
    rng: np.random.Generator,
    effect: str = "weak",
    tau: Union[float, np.ndarray] = DEFAULT_EFFECT,
    dim: int = TABLE2_DIM,
) -> FinitePopulation:
    """Equicorrelated Gaussian outcomes with no covariates.

    Treated responses are independent across coordinates; control responses
    are strongly correlated, so pooled and unpooled covariances disagree.
    ``tau`` is only used by the ``constant`` and ``heterogeneous`` effects.
    """
    if n_units < 10:
        raise ConfigError(f"Simulation populations need N >= 10, got {n_units}")
    r1 = rng.multivariate_normal(np.zeros(dim), equicorrelation(dim, TABLE2_RHO_TREATED), size=n_units, method="cholesky")
    r0 = rng.multivariate_normal(np.zeros(dim), equicorrelation(dim, TABLE2_RHO_CONTROL), size=n_units, method="cholesky")
    tau_vec = np.broadcast_to(np.asarray(tau, dtype=float), (dim,)).copy()
    return _assemble(r1, r0, np.zeros((n_units, 0)), effect, tau_vec)
