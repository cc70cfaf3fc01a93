"""
Finite-population data model.

A ``FinitePopulation`` is the full science table (both potential outcome
matrices plus covariates) and is only available to simulators and oracles.
An ``ObservedStudy`` is what an analyst holds: one outcome row per unit under
the realized assignment. Both are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DimensionMismatchError, InvalidDesignError


def as_matrix(values, name: str = "values") -> np.ndarray:
    """Return a read-only float copy of ``values`` shaped (rows, columns)."""
    array = np.array(values, dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2:
        raise DimensionMismatchError(f"{name} must be one- or two-dimensional, got shape {array.shape}")
    array.flags.writeable = False
    return array


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array)
    array.flags.writeable = False
    return array


def _binary_arms(assignment: np.ndarray) -> tuple[np.ndarray, int, int]:
    w = np.asarray(assignment)
    if w.ndim != 1:
        raise InvalidDesignError(f"Assignment must be a vector, got shape {w.shape}")
    if not np.isin(w, (0, 1)).all():
        raise InvalidDesignError("Two-arm assignment must contain only 0 and 1")
    treated = w == 1
    n1 = int(treated.sum())
    n0 = w.size - n1
    if n1 == 0 or n0 == 0:
        raise InvalidDesignError(f"Degenerate assignment: n1={n1}, n0={n0}")
    return treated, n1, n0


def difference_in_means(values, assignment) -> np.ndarray:
    """Treated-minus-control difference of column means.

    ``values`` is N×m (a vector is read as one column); ``assignment`` is a
    binary vector of length N with both arms nonempty.
    """
    r = as_matrix(values)
    treated, n1, n0 = _binary_arms(assignment)
    if r.shape[0] != treated.size:
        raise DimensionMismatchError(
            f"values have {r.shape[0]} rows but assignment has length {treated.size}"
        )
    return r[treated].sum(axis=0) / n1 - r[~treated].sum(axis=0) / n0


def _cross_cov(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    return (a - a.mean(axis=0)).T @ (b - b.mean(axis=0)) / (n - 1)


@dataclass(frozen=True)
class FinitePopulation:
    """Science table: potential outcomes under treatment and control plus covariates."""

    y1: np.ndarray
    y0: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        y1 = as_matrix(self.y1, "y1")
        y0 = as_matrix(self.y0, "y0")
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if x.size else np.zeros((y1.shape[0], 0))
        x.flags.writeable = False
        if y1.shape != y0.shape:
            raise DimensionMismatchError(f"y1 shape {y1.shape} differs from y0 shape {y0.shape}")
        if x.shape[0] != y1.shape[0]:
            raise DimensionMismatchError(f"x has {x.shape[0]} rows, outcomes have {y1.shape[0]}")
        if y1.shape[0] < 2:
            raise InvalidDesignError("A finite population needs at least two units")
        if y1.shape[1] < 1:
            raise DimensionMismatchError("Outcome dimension must be at least one")
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "x", x)

    @property
    def n_units(self) -> int:
        return self.y1.shape[0]

    @property
    def outcome_dim(self) -> int:
        return self.y1.shape[1]

    @property
    def covariate_dim(self) -> int:
        return self.x.shape[1]

    @property
    def tau(self) -> np.ndarray:
        """Unit-level effects, one row per unit."""
        return self.y1 - self.y0

    @property
    def tau_bar(self) -> np.ndarray:
        return self.tau.mean(axis=0)

    def observe(self, assignment, pairs: Optional[np.ndarray] = None) -> "ObservedStudy":
        """Reveal the outcomes a binary ``assignment`` would produce."""
        treated, _, _ = _binary_arms(assignment)
        if treated.size != self.n_units:
            raise DimensionMismatchError(
                f"Assignment length {treated.size} does not match N={self.n_units}"
            )
        outcomes = np.where(treated[:, None], self.y1, self.y0)
        return ObservedStudy(
            outcomes=outcomes,
            assignment=treated.astype(int),
            covariates=self.x,
            pairs=pairs,
        )


@dataclass(frozen=True)
class ObservedStudy:
    """Observed outcomes, realized assignment, and covariates."""

    outcomes: np.ndarray
    assignment: np.ndarray
    covariates: np.ndarray
    n_arms: int = 2
    pairs: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        outcomes = as_matrix(self.outcomes, "outcomes")
        n = outcomes.shape[0]
        assignment = np.asarray(self.assignment)
        if assignment.ndim != 1 or assignment.size != n:
            raise DimensionMismatchError(
                f"Assignment must be a vector of length {n}, got shape {assignment.shape}"
            )
        if not np.all(np.equal(np.mod(assignment, 1), 0)):
            raise InvalidDesignError("Arm labels must be integers")
        assignment = _frozen(assignment.astype(int))
        if self.n_arms < 2:
            raise InvalidDesignError(f"A study needs at least two arms, got {self.n_arms}")
        if assignment.min() < 0 or assignment.max() >= self.n_arms:
            raise InvalidDesignError(
                f"Arm labels must lie in 0..{self.n_arms - 1}, got {sorted(set(assignment.tolist()))}"
            )

        covariates = np.array(self.covariates, dtype=float)
        if covariates.ndim == 1:
            covariates = covariates.reshape(-1, 1) if covariates.size else np.zeros((n, 0))
        if covariates.shape[0] != n:
            raise DimensionMismatchError(f"covariates have {covariates.shape[0]} rows, expected {n}")
        covariates.flags.writeable = False

        sizes = np.bincount(assignment, minlength=self.n_arms)
        if (sizes < 2).any():
            raise InvalidDesignError(f"Every arm needs at least two units, got arm sizes {sizes.tolist()}")

        pairs = self.pairs
        if pairs is not None:
            pairs = _frozen(np.asarray(pairs))
            if pairs.shape != (n,):
                raise InvalidDesignError(f"Pair labels must be a vector of length {n}")

        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "pairs", pairs)

    @property
    def n_units(self) -> int:
        return self.outcomes.shape[0]

    @property
    def outcome_dim(self) -> int:
        return self.outcomes.shape[1]

    @property
    def covariate_dim(self) -> int:
        return self.covariates.shape[1]

    @property
    def arm_sizes(self) -> tuple[int, ...]:
        """Unit counts per arm label (n0, n1 for two arms)."""
        return tuple(int(c) for c in np.bincount(self.assignment, minlength=self.n_arms))

    def shift(self, c) -> "ObservedStudy":
        """Return the study with outcomes ``y_i - Z_i c`` (two-arm only)."""
        if self.n_arms != 2:
            raise InvalidDesignError("Outcome shifting is defined for two-arm studies only")
        c = np.atleast_1d(np.asarray(c, dtype=float))
        if c.shape != (self.outcome_dim,):
            raise DimensionMismatchError(
                f"Shift has length {c.size} but outcomes have dimension {self.outcome_dim}"
            )
        shifted = self.outcomes - self.assignment[:, None] * c[None, :]
        return ObservedStudy(shifted, self.assignment, self.covariates, self.n_arms, self.pairs)

    def with_outcomes(self, outcomes) -> "ObservedStudy":
        return ObservedStudy(outcomes, self.assignment, self.covariates, self.n_arms, self.pairs)


def impute_sharp_null(study: ObservedStudy, c=None) -> FinitePopulation:
    """Impute the science table implied by ``tau_i = c`` for every unit.

    Control outcomes are ``y_i(Z_i) - Z_i c`` and treated outcomes add ``c``
    back, so re-observing the result under the original assignment reproduces
    the observed outcomes.
    """
    if study.n_arms != 2:
        raise InvalidDesignError("Sharp-null imputation with a shift needs a two-arm study")
    c = np.zeros(study.outcome_dim) if c is None else np.atleast_1d(np.asarray(c, dtype=float))
    if c.shape != (study.outcome_dim,):
        raise DimensionMismatchError(
            f"Effect vector has length {c.size}, outcomes have dimension {study.outcome_dim}"
        )
    treated = study.assignment == 1
    y0 = study.outcomes - treated[:, None] * c[None, :]
    y1 = y0 + c[None, :]
    # Keep observed entries bit-identical; y0 + c may round differently from y.
    y1 = np.where(treated[:, None], study.outcomes, y1)
    return FinitePopulation(y1=y1, y0=y0, x=study.covariates)


@dataclass(frozen=True)
class MomentSet:
    """Finite-population means and (N-1)-divisor covariances."""

    mean_y1: np.ndarray
    mean_y0: np.ndarray
    mean_x: np.ndarray
    sigma_y1: np.ndarray
    sigma_y0: np.ndarray
    sigma_tau: np.ndarray
    sigma_x: np.ndarray
    sigma_y1x: np.ndarray
    sigma_y0x: np.ndarray
    sigma_taux: np.ndarray


def population_moments(pop: FinitePopulation) -> MomentSet:
    tau = pop.tau
    return MomentSet(
        mean_y1=pop.y1.mean(axis=0),
        mean_y0=pop.y0.mean(axis=0),
        mean_x=pop.x.mean(axis=0) if pop.covariate_dim else np.zeros(0),
        sigma_y1=_cross_cov(pop.y1, pop.y1),
        sigma_y0=_cross_cov(pop.y0, pop.y0),
        sigma_tau=_cross_cov(tau, tau),
        sigma_x=_cross_cov(pop.x, pop.x),
        sigma_y1x=_cross_cov(pop.y1, pop.x),
        sigma_y0x=_cross_cov(pop.y0, pop.x),
        sigma_taux=_cross_cov(tau, pop.x),
    )


@dataclass(frozen=True)
class OracleCovariances:
    """Finite-N versions of the randomization (v_full) and reference (v_tilde) covariances."""

    v_full: np.ndarray
    v_tilde: np.ndarray


def oracle_covariances(pop: FinitePopulation, n1: int) -> OracleCovariances:
    """Assemble the covariance of ``sqrt(N)(tau_hat - tau_bar, delta_hat)`` and its reference analogue.

    The limiting treated proportion is replaced by ``n1 / N``.
    """
    n = pop.n_units
    if not 1 <= n1 <= n - 1:
        raise InvalidDesignError(f"n1 must lie in [1, {n - 1}], got {n1}")
    p = n1 / n
    m = population_moments(pop)

    v_tt = m.sigma_y1 / p + m.sigma_y0 / (1 - p) - m.sigma_tau
    v_td = m.sigma_y1x / p + m.sigma_y0x / (1 - p)
    vt_tt = m.sigma_y1 / (1 - p) + m.sigma_y0 / p
    vt_td = m.sigma_y1x / (1 - p) + m.sigma_y0x / p
    v_dd = m.sigma_x / (p * (1 - p))

    return OracleCovariances(
        v_full=np.block([[v_tt, v_td], [v_td.T, v_dd]]),
        v_tilde=np.block([[vt_tt, vt_td], [vt_td.T, v_dd]]),
    )
