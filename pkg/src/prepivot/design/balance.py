"""
Balance criteria for rerandomized designs.

A criterion is an indicator over scaled covariate imbalance vectors
``b = sqrt(N) * delta_hat``. Its acceptance set must be closed, convex,
symmetric about the origin and contain the origin in its interior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

import numpy as np
from scipy import linalg

from ..errors import ConfigError, DecompositionError, DimensionMismatchError, InvalidDesignError
from ..utils import get_logger


logger = get_logger(__name__)

KINDS = ("none", "mahalanobis", "custom")


def covariate_metric(x: np.ndarray, n1: int) -> np.ndarray:
    """Covariance of ``sqrt(N) * delta_hat`` over all completely randomized assignments.

    Equals ``N * Sigma_x * (1/n1 + 1/n0)`` with the (N-1)-divisor covariance of
    ``x``; this is the default metric for Mahalanobis criteria.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n = x.shape[0]
    if not 1 <= n1 <= n - 1:
        raise InvalidDesignError(f"n1 must lie in [1, {n - 1}], got {n1}")
    sigma_x = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    return n * sigma_x * (1.0 / n1 + 1.0 / (n - n1))


@dataclass(frozen=True, eq=False)
class BalanceCriterion:
    """Indicator ``phi`` over scaled imbalance vectors."""

    kind: str = "none"
    threshold: float = float("inf")
    metric: Optional[np.ndarray] = None
    indicator: Optional[Callable[[np.ndarray], bool]] = field(default=None, compare=False)
    dim: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"Unknown balance criterion kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "mahalanobis":
            if not self.threshold > 0:
                raise ConfigError(f"Mahalanobis threshold must be positive, got {self.threshold}")
            if self.metric is not None:
                metric = np.atleast_2d(np.array(self.metric, dtype=float))
                if metric.shape[0] != metric.shape[1]:
                    raise DimensionMismatchError(f"Metric must be square, got shape {metric.shape}")
                if not np.allclose(metric, metric.T, rtol=1e-10, atol=1e-12):
                    raise DecompositionError("Balance metric must be symmetric")
                try:
                    linalg.cho_factor(metric)
                except linalg.LinAlgError as exc:
                    raise DecompositionError("Balance metric is not positive definite") from exc
                metric.flags.writeable = False
                object.__setattr__(self, "metric", metric)
                object.__setattr__(self, "dim", metric.shape[0])
        if self.kind == "custom" and self.indicator is None:
            raise ConfigError("Custom balance criteria need an indicator function")

    @classmethod
    def none(cls) -> "BalanceCriterion":
        return cls()

    @classmethod
    def mahalanobis(cls, threshold: float, metric: Optional[np.ndarray] = None) -> "BalanceCriterion":
        """``b' metric^{-1} b <= threshold``; a missing metric is resolved from the covariates."""
        return cls(kind="mahalanobis", threshold=float(threshold), metric=metric)

    @classmethod
    def custom(
        cls,
        indicator: Callable[[np.ndarray], bool],
        dim: int,
        seed: int = 0,
        n_points: int = 200,
    ) -> "BalanceCriterion":
        """Wrap a user indicator after spot-checking symmetry and convexity."""
        criterion = cls(kind="custom", indicator=indicator, dim=dim)
        validate_custom(criterion, seed=seed, n_points=n_points)
        return criterion

    @property
    def is_trivial(self) -> bool:
        return self.kind == "none"

    def resolve(self, covariates: np.ndarray, n1: int) -> "BalanceCriterion":
        """Fill in the default Mahalanobis metric from the study covariates."""
        if self.kind != "mahalanobis" or self.metric is not None:
            return self
        return BalanceCriterion.mahalanobis(self.threshold, covariate_metric(covariates, n1))

    def to_dict(self) -> dict:
        payload: dict = {"kind": self.kind}
        if self.kind == "mahalanobis":
            payload["a"] = self.threshold
            if self.metric is not None:
                payload["metric"] = self.metric.tolist()
        return payload

    @classmethod
    def from_config(cls, config: Optional[Mapping[str, Any]]) -> "BalanceCriterion":
        """Parse the ``balance`` entry of a run-configuration file."""
        if not config:
            return cls.none()
        kind = config.get("kind", "none")
        if kind == "none":
            return cls.none()
        if kind == "mahalanobis":
            if "a" not in config:
                raise ConfigError("Mahalanobis balance config needs a threshold 'a'")
            metric = config.get("metric")
            return cls.mahalanobis(config["a"], None if metric is None else np.asarray(metric, dtype=float))
        raise ConfigError(f"Balance kind {kind!r} cannot be declared in a config file")


def mahalanobis_distances(criterion: BalanceCriterion, scaled_deltas: np.ndarray) -> np.ndarray:
    """Quadratic forms ``b' metric^{-1} b`` for each row of ``scaled_deltas``."""
    if criterion.metric is None:
        raise ConfigError("Mahalanobis criterion has no metric; call resolve() with the covariates first")
    b = np.atleast_2d(np.asarray(scaled_deltas, dtype=float))
    if b.shape[1] != criterion.metric.shape[0]:
        raise DimensionMismatchError(
            f"Imbalance vectors have length {b.shape[1]}, metric is {criterion.metric.shape[0]}-dimensional"
        )
    factor = linalg.cho_factor(criterion.metric)
    solved = linalg.cho_solve(factor, b.T)
    return np.einsum("ij,ji->i", b, solved)


def accepts(criterion: BalanceCriterion, scaled_deltas: np.ndarray) -> np.ndarray:
    """Vectorized ``phi`` over the rows of ``scaled_deltas``."""
    b = np.atleast_2d(np.asarray(scaled_deltas, dtype=float))
    if criterion.kind == "none":
        return np.ones(b.shape[0], dtype=bool)
    if criterion.dim is not None and b.shape[1] != criterion.dim:
        raise DimensionMismatchError(
            f"Imbalance vectors have length {b.shape[1]}, criterion expects {criterion.dim}"
        )
    if criterion.kind == "mahalanobis":
        return mahalanobis_distances(criterion, b) <= criterion.threshold
    return np.fromiter((bool(criterion.indicator(row)) for row in b), dtype=bool, count=b.shape[0])


def is_balanced(criterion: BalanceCriterion, scaled_delta: np.ndarray) -> bool:
    """``phi(b)`` for a single imbalance vector; boundary points are accepted."""
    b = np.asarray(scaled_delta, dtype=float).reshape(1, -1)
    return bool(accepts(criterion, b)[0])


def validate_custom(criterion: BalanceCriterion, seed: int = 0, n_points: int = 200) -> None:
    """Spot-check origin membership, mirror symmetry and convexity of a custom criterion.

    Raises ``InvalidDesignError`` on the first violation found.
    """
    dim = criterion.dim
    if dim is None or dim < 1:
        raise ConfigError("Custom balance criteria need a positive dimension")
    if not is_balanced(criterion, np.zeros(dim)):
        raise InvalidDesignError("Balance criterion must accept the origin")

    rng = np.random.default_rng(seed)
    points = rng.standard_normal((n_points, dim)) * rng.exponential(1.0, size=(n_points, 1))
    accepted = accepts(criterion, points)
    mirrored = accepts(criterion, -points)
    if not np.array_equal(accepted, mirrored):
        bad = points[np.argmax(accepted != mirrored)]
        raise InvalidDesignError(f"Balance criterion is not mirror-symmetric at b={bad.tolist()}")

    inside = points[accepted]
    if inside.shape[0] < 2:
        logger.warning("Convexity check found fewer than two accepted points; skipping")
        return
    first = inside[rng.integers(0, inside.shape[0], size=n_points)]
    second = inside[rng.integers(0, inside.shape[0], size=n_points)]
    lam = rng.random((n_points, 1))
    combos = lam * first + (1 - lam) * second
    ok = accepts(criterion, combos)
    if not ok.all():
        bad = combos[np.argmin(ok)]
        raise InvalidDesignError(f"Balance criterion is not convex: rejects b={bad.tolist()}")
