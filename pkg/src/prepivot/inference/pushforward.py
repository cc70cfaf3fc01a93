"""
Gaussian pushforward prepivoting.

``g = P{ f_eta(A) <= t | phi(B) = 1 }`` for ``(A, B) ~ N(0, V_hat)``. Closed
forms are used where they exist; otherwise the conditional probability is the
joint-acceptance count over the balance-acceptance count of the same draws.
The complementary tail ``1 - g`` is carried alongside ``g`` and computed
directly, so comparisons near 1 keep their resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy import linalg, special, stats

from ..data.population import FinitePopulation, ObservedStudy
from ..design.balance import BalanceCriterion, accepts
from ..errors import BalanceMassError, ConfigError, DimensionMismatchError
from ..models.covariance import CovEstimate, estimate_covariance
from ..models.estimators import EstimatorSpec
from ..models.statistics import Eta, StatisticSpec, compute_xi, evaluate, evaluate_rows
from ..utils import Purpose, get_logger, substream


logger = get_logger(__name__)

METHODS = ("auto", "closed_form", "monte_carlo")
_BATCH = 50_000


@dataclass(frozen=True)
class GaussEngineConfig:
    draws: int = 10_000
    seed: int = 20240101
    method: str = "auto"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"Unknown Gaussian method {self.method!r}; expected one of {METHODS}")
        if self.method == "monte_carlo" and self.draws < 100:
            raise ConfigError(f"Monte Carlo prepivoting needs at least 100 draws, got {self.draws}")
        if self.draws < 1:
            raise ConfigError(f"draws must be positive, got {self.draws}")


@dataclass(frozen=True)
class PrepivotValue:
    g: float
    tail: float
    method_used: str
    mc_std_error: float = 0.0
    denominator_estimate: float = 1.0
    statistic: float = float("nan")
    repaired: bool = False
    extras: dict = field(default_factory=dict, compare=False)


def gaussian_factor(v: np.ndarray) -> np.ndarray:
    """Symmetric square root ``L`` with ``L L' = v`` from an eigendecomposition."""
    values, vectors = linalg.eigh(np.atleast_2d(v))
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def _closed_form(
    vhat: CovEstimate, spec: StatisticSpec, eta: Eta, t_obs: float
) -> Optional[PrepivotValue]:
    if spec.family == "abs" and vhat.m == 1:
        scale = float(np.asarray(eta).reshape(-1)[0])
        sd = float(np.sqrt(vhat.tt[0, 0]))
        tail = float(2.0 * special.ndtr(-scale * t_obs / sd))
        return PrepivotValue(g=1.0 - tail, tail=tail, method_used="closed_form_normal", statistic=t_obs)
    if spec.family == "quad_form" and np.array_equal(np.asarray(eta), vhat.tt):
        tail = float(stats.chi2.sf(t_obs, df=vhat.m))
        g = float(stats.chi2.cdf(t_obs, df=vhat.m))
        return PrepivotValue(g=g, tail=tail, method_used="closed_form_chi2", statistic=t_obs)
    return None


def _mahalanobis_mass(vhat: CovEstimate, criterion: BalanceCriterion) -> Optional[float]:
    """Gaussian mass of the acceptance set when the metric equals ``V_hat_dd``."""
    if criterion.kind != "mahalanobis" or criterion.metric is None:
        return None
    if criterion.metric.shape != vhat.dd.shape or not np.allclose(criterion.metric, vhat.dd, rtol=1e-12, atol=0):
        return None
    return float(stats.chi2.cdf(criterion.threshold, df=vhat.k))


def pushforward_cdf(
    vhat: CovEstimate,
    spec: StatisticSpec,
    eta: Eta,
    criterion: BalanceCriterion,
    t_obs: float,
    cfg: GaussEngineConfig,
    stream_index: int = 0,
) -> PrepivotValue:
    """Conditional Gaussian probability that ``f_eta(A) <= t_obs`` given ``phi(B) = 1``."""
    if not t_obs >= 0:
        raise ValueError(f"Observed statistic must be nonnegative, got {t_obs}")
    conditional = not criterion.is_trivial
    if conditional and vhat.k == 0:
        raise DimensionMismatchError("A balance criterion needs covariate blocks in the covariance estimate")
    if conditional and criterion.dim is not None and criterion.dim != vhat.k:
        raise DimensionMismatchError(
            f"Balance criterion is {criterion.dim}-dimensional but the estimate has {vhat.k} covariates"
        )

    if not conditional and cfg.method != "monte_carlo":
        value = _closed_form(vhat, spec, eta, t_obs)
        if value is not None:
            logger.debug("Prepivot route %s for %s (stream %d)", value.method_used, spec.name, stream_index)
            return replace(value, repaired=vhat.repaired)
    if cfg.method == "closed_form":
        raise ConfigError(f"No closed form for statistic {spec.name} under criterion {criterion.kind}")

    m = vhat.m
    v = vhat.v if conditional else vhat.tt
    factor = gaussian_factor(v)
    rng = substream(cfg.seed, Purpose.GAUSSIAN, stream_index)

    accepted = 0
    joint = 0
    remaining = cfg.draws
    while remaining > 0:
        batch = min(_BATCH, remaining)
        draws = rng.standard_normal((batch, v.shape[0])) @ factor.T
        values = evaluate_rows(spec, eta, draws[:, :m])
        if conditional:
            ok = accepts(criterion, draws[:, m:])
        else:
            ok = np.ones(batch, dtype=bool)
        accepted += int(ok.sum())
        joint += int((ok & (values <= t_obs)).sum())
        remaining -= batch

    if accepted == 0:
        raise BalanceMassError(
            f"None of {cfg.draws} Gaussian draws satisfied the balance criterion; increase the draw count"
        )
    g = joint / accepted
    tail = (accepted - joint) / accepted
    route_mass = _mahalanobis_mass(vhat, criterion) if conditional else None
    logger.debug(
        "Prepivot route monte_carlo for %s (stream %d): %d draws, %d accepted",
        spec.name,
        stream_index,
        cfg.draws,
        accepted,
    )
    return PrepivotValue(
        g=g,
        tail=tail,
        method_used="monte_carlo",
        mc_std_error=float(np.sqrt(g * (1.0 - g) / accepted)),
        denominator_estimate=route_mass if route_mass is not None else accepted / cfg.draws,
        statistic=t_obs,
        repaired=vhat.repaired,
        extras={"accepted": accepted},
    )


def gaussian_tail(
    vhat: CovEstimate,
    spec: StatisticSpec,
    eta: Eta,
    criterion: BalanceCriterion,
    v: float,
    cfg: GaussEngineConfig,
    stream_index: int = 0,
) -> PrepivotValue:
    """``P{ f_eta(A) > v | phi(B) = 1 }``; the returned ``g`` field holds the tail."""
    value = pushforward_cdf(vhat, spec, eta, criterion, v, cfg, stream_index)
    return replace(value, g=value.tail, tail=value.g)


Source = Union[ObservedStudy, FinitePopulation]


def assignment_view(source: Source, w, template: Optional[ObservedStudy] = None) -> ObservedStudy:
    """The study seen under assignment ``w``.

    An ``ObservedStudy`` keeps its outcomes (sharp-null imputation); a
    ``FinitePopulation`` reveals the potential outcomes ``w`` selects.
    """
    w = np.asarray(w)
    if isinstance(source, FinitePopulation):
        pairs = template.pairs if template is not None else None
        return source.observe(w, pairs=pairs)
    return ObservedStudy(source.outcomes, w, source.covariates, source.n_arms, source.pairs)


def statistic_for_assignment(
    source: Source,
    w,
    spec: StatisticSpec,
    estimator: EstimatorSpec,
    criterion: BalanceCriterion,
    template: Optional[ObservedStudy] = None,
):
    """Scaled effect, covariance estimate, parameter and statistic value under ``w``."""
    view = assignment_view(source, w, template)
    estimate, scale = estimator.estimate(view, w)
    t = np.sqrt(scale) * np.asarray(estimate, dtype=float)
    vhat = estimate_covariance(estimator, view, w, include_covariates=not criterion.is_trivial)
    eta = compute_xi(spec, view, w, vhat)
    return t, vhat, eta, evaluate(spec, eta, t)


def prepivot_assignment(
    source: Source,
    w,
    spec: StatisticSpec,
    estimator: EstimatorSpec,
    criterion: BalanceCriterion,
    cfg: GaussEngineConfig,
    stream_index: int,
) -> PrepivotValue:
    """Recompute the statistic and covariance under ``w`` and prepivot it."""
    _, vhat, eta, statistic = statistic_for_assignment(source, w, spec, estimator, criterion)
    return pushforward_cdf(vhat, spec, eta, criterion, statistic, cfg, stream_index)
