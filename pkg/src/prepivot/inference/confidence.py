"""Confidence sets by inverting shifted randomization tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..data.population import ObservedStudy
from ..design.spaces import AssignmentSpace
from ..errors import ConfigError
from ..models.estimators import EstimatorSpec
from ..models.statistics import StatisticSpec
from ..utils import get_logger
from .frt import FRTConfig, randomization_test


logger = get_logger(__name__)


@dataclass(frozen=True)
class ConfidenceSet:
    grid: List[List[float]]
    p_values: List[float]
    accepted: List[List[float]]
    alpha: float
    is_interval: bool
    config: Dict[str, Any] = field(default_factory=dict)

    @property
    def bounds(self) -> Optional[tuple]:
        """Smallest and largest accepted grid point for scalar effects."""
        if not self.accepted or len(self.accepted[0]) != 1:
            return None
        values = [c[0] for c in self.accepted]
        return min(values), max(values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "accepted": self.accepted,
            "is_interval": self.is_interval,
            "bounds": list(self.bounds) if self.bounds else None,
            "grid": self.grid,
            "p_values": self.p_values,
            "config": self.config,
        }


def parse_grid(text: str) -> List[float]:
    """Parse ``lo:hi:step`` into the inclusive grid ``lo, lo + step, ..., <= hi``."""
    try:
        lo, hi, step = (float(part) for part in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"Grid must look like lo:hi:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise ConfigError(f"Grid {text!r} needs step > 0 and hi >= lo")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]


def confidence_set(
    study: ObservedStudy,
    space: AssignmentSpace,
    spec: StatisticSpec,
    grid: Sequence,
    estimator: Optional[EstimatorSpec] = None,
    cfg: Optional[FRTConfig] = None,
) -> ConfidenceSet:
    """Grid points ``c`` whose shifted test has ``p > alpha``.

    Every point reuses the same seed, so the set is deterministic.
    """
    cfg = cfg or FRTConfig.from_settings()
    points = [np.atleast_1d(np.asarray(c, dtype=float)) for c in grid]
    if not points:
        raise ConfigError("Confidence grid is empty")

    p_values = []
    for c in points:
        report = randomization_test(study, space, spec, estimator, cfg, null_shift=c)
        p_values.append(report.p_value)
    flags = [p > cfg.alpha for p in p_values]
    accepted_idx = [i for i, ok in enumerate(flags) if ok]
    if not accepted_idx:
        logger.warning("Confidence set is empty on the supplied grid; widen the grid")
    is_interval = bool(accepted_idx) and accepted_idx == list(range(accepted_idx[0], accepted_idx[-1] + 1))
    return ConfidenceSet(
        grid=[c.tolist() for c in points],
        p_values=p_values,
        accepted=[points[i].tolist() for i in accepted_idx],
        alpha=cfg.alpha,
        is_interval=is_interval,
        config={**cfg.to_dict(), "statistic": spec.name, "design": space.kind},
    )
