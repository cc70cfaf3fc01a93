"""
Fisher randomization test engine.

The observed prepivoted value is compared with the values every assignment
in the design (or a uniform sample of them) would produce on the
sharp-null-imputed outcomes. In exact mode each assignment's Gaussian stream
is keyed by its lexicographic rank in the design, the observed assignment
included, so ``g`` is a fixed function of the assignment.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..config import settings
from ..data.population import FinitePopulation, ObservedStudy
from ..design.balance import BalanceCriterion
from ..design.spaces import AssignmentSpace
from ..errors import ConfigError, InvalidDesignError
from ..models.estimators import EstimatorSpec
from ..models.statistics import StatisticSpec
from ..utils import get_logger, ordered_map
from .pushforward import GaussEngineConfig, pushforward_cdf, statistic_for_assignment


logger = get_logger(__name__)

MODES = ("auto", "exact", "sampled")


@dataclass(frozen=True)
class FRTConfig:
    mode: str = "auto"
    draws_omega: int = 1_000
    draws_gauss: int = 10_000
    gauss_method: str = "auto"
    alpha: float = 0.05
    seed: int = 20240101
    threads: int = 1
    cap: int = 1_000_000
    max_attempts: int = 1_000_000

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"Unknown mode {self.mode!r}; expected one of {MODES}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.draws_omega < 1:
            raise ConfigError(f"draws_omega must be positive, got {self.draws_omega}")

    @classmethod
    def from_settings(cls, **overrides: Any) -> "FRTConfig":
        base = dict(
            draws_omega=settings.draws_omega,
            draws_gauss=settings.draws_gauss,
            seed=settings.seed,
            threads=settings.threads,
            cap=settings.enumeration_cap,
            max_attempts=settings.max_attempts,
        )
        base.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**base)

    @property
    def gauss(self) -> GaussEngineConfig:
        return GaussEngineConfig(draws=self.draws_gauss, seed=self.seed, method=self.gauss_method)

    def to_dict(self) -> Dict[str, Any]:
        """Echo of the settings that determine results (worker count excluded)."""
        return {
            "mode": self.mode,
            "draws_omega": self.draws_omega,
            "draws_gauss": self.draws_gauss,
            "gauss_method": self.gauss_method,
            "alpha": self.alpha,
            "seed": self.seed,
            "cap": self.cap,
            "max_attempts": self.max_attempts,
        }


@dataclass(frozen=True)
class AssignmentValue:
    statistic: float
    g: float = float("nan")
    tail: float = float("nan")
    method: str = "raw"
    mc_std_error: float = 0.0
    denominator: float = 1.0
    repaired: bool = False


@dataclass(frozen=True)
class ReferenceDistribution:
    """Values of the (prepivoted or raw) statistic across assignments."""

    values: np.ndarray
    mode: str
    includes_observed: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.size == 0:
            raise ValueError("A reference distribution needs at least one value")
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)

    def cdf(self, t: float) -> float:
        return float(np.searchsorted(self.sorted_values, t, side="right") / self.size)

    def summary(self) -> Dict[str, Any]:
        quantiles = np.quantile(self.values, [0.05, 0.25, 0.5, 0.75, 0.95])
        return {
            "mode": self.mode,
            "size": int(self.size),
            "includes_observed": self.includes_observed,
            "mean": float(self.values.mean()),
            "quantiles": {q: float(v) for q, v in zip(("q05", "q25", "q50", "q75", "q95"), quantiles)},
        }


@dataclass(frozen=True)
class TestReport:
    g_observed: float
    statistic_observed: float
    p_value: float
    alpha: float
    reject: bool
    reference: ReferenceDistribution
    prepivoted: bool = True
    large_sample_p_value: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)

    __test__ = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "g_observed": self.g_observed if self.prepivoted else None,
            "statistic_observed": self.statistic_observed,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "prepivoted": self.prepivoted,
            "large_sample_p_value": self.large_sample_p_value,
            "reference": self.reference.summary(),
            "diagnostics": self.diagnostics,
            "config": self.config,
        }

    def summary_table(self) -> str:
        rows = [
            ("statistic", self.config.get("statistic", "")),
            ("prepivoted", self.prepivoted),
            ("observed statistic", f"{self.statistic_observed:.6g}"),
            ("observed g", f"{self.g_observed:.6g}" if self.prepivoted else "-"),
            ("p-value", f"{self.p_value:.6g}"),
            ("alpha", self.alpha),
            ("reject", self.reject),
            ("reference size", self.reference.size),
            ("mode", self.reference.mode),
        ]
        if self.large_sample_p_value is not None:
            rows.append(("large-sample p-value", f"{self.large_sample_p_value:.6g}"))
        frame = pd.DataFrame(rows, columns=["field", "value"])
        return frame.to_string(index=False)


def _evaluate(
    item: Tuple[np.ndarray, int],
    source,
    spec: StatisticSpec,
    estimator: EstimatorSpec,
    criterion: BalanceCriterion,
    gauss: GaussEngineConfig,
    prepivot: bool,
    template: Optional[ObservedStudy],
) -> AssignmentValue:
    w, stream_index = item
    _, vhat, eta, statistic = statistic_for_assignment(source, w, spec, estimator, criterion, template)
    if not prepivot:
        return AssignmentValue(statistic=statistic, repaired=vhat.repaired)
    value = pushforward_cdf(vhat, spec, eta, criterion, statistic, gauss, stream_index)
    return AssignmentValue(
        statistic=statistic,
        g=value.g,
        tail=value.tail,
        method=value.method_used,
        mc_std_error=value.mc_std_error,
        denominator=value.denominator_estimate,
        repaired=value.repaired,
    )


def _resolve_mode(space: AssignmentSpace, cfg: FRTConfig) -> str:
    if cfg.mode != "auto":
        return cfg.mode
    return "exact" if space.super_cardinality() <= cfg.cap else "sampled"


def _assignment_batch(
    space: AssignmentSpace, cfg: FRTConfig, observed: np.ndarray, mode: str
) -> Tuple[np.ndarray, np.ndarray, Optional[int]]:
    """Assignments to evaluate, their stream indices, and the observed row (exact mode)."""
    if mode == "exact":
        rows = space.enumerate(cfg.cap)
        key = np.asarray(observed).astype(rows.dtype).tobytes()
        ranks = {row.tobytes(): i for i, row in enumerate(rows)}
        if key not in ranks:
            raise InvalidDesignError("The observed assignment is not an element of the design")
        return rows, np.arange(rows.shape[0]), ranks[key]
    rows = space.sample_uniform(cfg.draws_omega, cfg.seed, cfg.threads, cfg.max_attempts, start=1)
    return rows, np.arange(1, cfg.draws_omega + 1), None


def _run(
    source,
    observed: np.ndarray,
    space: AssignmentSpace,
    spec: StatisticSpec,
    estimator: EstimatorSpec,
    criterion: BalanceCriterion,
    cfg: FRTConfig,
    prepivot: bool,
    template: Optional[ObservedStudy] = None,
) -> Tuple[AssignmentValue, List[AssignmentValue], str]:
    mode = _resolve_mode(space, cfg)
    rows, indices, observed_row = _assignment_batch(space, cfg, observed, mode)
    logger.info(
        "Running %s %s test over %d assignments (%s mode)",
        "prepivoted" if prepivot else "raw",
        spec.name,
        rows.shape[0],
        mode,
    )
    evaluate = partial(
        _evaluate,
        source=source,
        spec=spec,
        estimator=estimator,
        criterion=criterion,
        gauss=cfg.gauss,
        prepivot=prepivot,
        template=template,
    )
    values = ordered_map(evaluate, list(zip(rows, indices.tolist())), threads=cfg.threads)
    if observed_row is not None:
        observed_value = values[observed_row]
    else:
        observed_value = evaluate((np.asarray(observed), 0))
    return observed_value, values, mode


def _p_value(observed: AssignmentValue, values: List[AssignmentValue], mode: str, prepivot: bool) -> float:
    if prepivot:
        # g_w >= g_z, compared on the directly computed tails
        count = sum(1 for v in values if v.tail <= observed.tail)
    else:
        count = sum(1 for v in values if v.statistic >= observed.statistic)
    if mode == "exact":
        return count / len(values)
    return (1 + count) / (len(values) + 1)


def _diagnostics(observed: AssignmentValue, values: List[AssignmentValue], mode: str, cfg: FRTConfig) -> Dict[str, Any]:
    routes = Counter(v.method for v in values)
    return {
        "mode": mode,
        "reference_size": len(values),
        "p_value_rule": "count/|Omega|" if mode == "exact" else "(1 + count)/(B + 1)",
        "seed": cfg.seed,
        "draws_omega": cfg.draws_omega if mode == "sampled" else None,
        "draws_gauss": cfg.draws_gauss,
        "routes": dict(sorted(routes.items())),
        "observed_route": observed.method,
        "observed_mc_std_error": observed.mc_std_error,
        "observed_balance_mass": observed.denominator,
        "covariance_repairs": int(sum(v.repaired for v in values)),
    }


def randomization_test(
    study: ObservedStudy,
    space: AssignmentSpace,
    spec: StatisticSpec,
    estimator: Optional[EstimatorSpec] = None,
    cfg: Optional[FRTConfig] = None,
    criterion: Optional[BalanceCriterion] = None,
    null_shift=None,
) -> TestReport:
    """Prepivoted randomization test of the null that every effect equals ``null_shift`` (default 0)."""
    return _test(study, space, spec, estimator, cfg, criterion, null_shift, prepivot=True)


def raw_statistic_test(
    study: ObservedStudy,
    space: AssignmentSpace,
    spec: StatisticSpec,
    estimator: Optional[EstimatorSpec] = None,
    cfg: Optional[FRTConfig] = None,
    null_shift=None,
) -> TestReport:
    """Classical randomization test on the statistic itself."""
    return _test(study, space, spec, estimator, cfg, None, null_shift, prepivot=False)


def _test(study, space, spec, estimator, cfg, criterion, null_shift, prepivot: bool) -> TestReport:
    estimator = estimator or EstimatorSpec("dim")
    cfg = cfg or FRTConfig.from_settings()
    criterion = space.criterion if criterion is None else criterion
    if null_shift is not None:
        study = study.shift(null_shift)
    if not space.contains(study.assignment):
        raise InvalidDesignError("The observed assignment is not an element of the design")

    observed, values, mode = _run(study, study.assignment, space, spec, estimator, criterion, cfg, prepivot)
    p_value = _p_value(observed, values, mode, prepivot)
    reference_values = [v.g if prepivot else v.statistic for v in values]
    if mode == "sampled":
        reference_values.append(observed.g if prepivot else observed.statistic)
    return TestReport(
        g_observed=observed.g if prepivot else float("nan"),
        statistic_observed=observed.statistic,
        p_value=p_value,
        alpha=cfg.alpha,
        reject=p_value <= cfg.alpha,
        reference=ReferenceDistribution(reference_values, mode, includes_observed=mode == "sampled"),
        prepivoted=prepivot,
        large_sample_p_value=observed.tail if prepivot else None,
        diagnostics=_diagnostics(observed, values, mode, cfg),
        config={
            **cfg.to_dict(),
            "statistic": spec.name,
            "estimator": estimator.to_dict(),
            "design": space.kind,
            "balance": criterion.to_dict(),
            "null_shift": None if null_shift is None else np.atleast_1d(null_shift).tolist(),
        },
    )


def oracle_randomization_distribution(
    pop: FinitePopulation,
    space: AssignmentSpace,
    spec: StatisticSpec,
    estimator: Optional[EstimatorSpec] = None,
    cfg: Optional[FRTConfig] = None,
    prepivot: bool = False,
) -> ReferenceDistribution:
    """Distribution of the statistic over the design using each assignment's true outcomes."""
    estimator = estimator or EstimatorSpec("dim")
    cfg = cfg or FRTConfig.from_settings()
    template = None
    if space.pairs is not None:
        labels = np.empty(space.n_units, dtype=int)
        for p, (i, j) in enumerate(space.pairs):
            labels[i] = labels[j] = p
        template = ObservedStudy(pop.y1, np.tile([1, 0], space.n_units // 2), pop.x, pairs=labels)
    mode = _resolve_mode(space, cfg)
    if mode == "exact":
        rows = space.enumerate(cfg.cap)
        indices = np.arange(rows.shape[0])
    else:
        rows = space.sample_uniform(cfg.draws_omega, cfg.seed, cfg.threads, cfg.max_attempts, start=1)
        indices = np.arange(1, cfg.draws_omega + 1)
    evaluate = partial(
        _evaluate,
        source=pop,
        spec=spec,
        estimator=estimator,
        criterion=space.criterion,
        gauss=cfg.gauss,
        prepivot=prepivot,
        template=template,
    )
    values = ordered_map(evaluate, list(zip(rows, indices.tolist())), threads=cfg.threads)
    return ReferenceDistribution([v.g if prepivot else v.statistic for v in values], mode)


def ks_distance(first: ReferenceDistribution, second: ReferenceDistribution) -> float:
    """Sup-norm distance between the empirical CDFs of two distributions."""
    return float(stats.ks_2samp(first.values, second.values).statistic)
