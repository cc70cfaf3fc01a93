"""Batch drivers for the simulation studies."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..config import settings
from ..data.population import FinitePopulation, ObservedStudy
from ..design.spaces import AssignmentSpace
from ..errors import ConfigError
from ..inference.frt import FRTConfig, randomization_test, raw_statistic_test
from ..inference.pushforward import GaussEngineConfig, pushforward_cdf, statistic_for_assignment
from ..models.estimators import EstimatorSpec
from ..models.statistics import StatisticSpec
from ..utils import Purpose, child_seed, get_logger, ordered_map, substream
from .scenarios import (
    DEFAULT_EFFECT,
    TABLE2_DIM,
    TREATED_FRACTION,
    generate_table1_population,
    generate_table2_population,
    table1_criterion,
)


logger = get_logger(__name__)

SCENARIOS = ("table1", "table2", "errors", "power")
_DEFAULT_EFFECT = {"table1": "weak", "table2": "weak", "errors": "weak", "power": "constant"}
_ALLOWED_EFFECTS = {
    "table1": ("sharp", "weak"),
    "table2": ("sharp", "weak"),
    "errors": ("sharp", "weak"),
    "power": ("constant", "heterogeneous"),
}
_DEFAULT_ALPHA = {"table1": 0.05, "table2": 0.05, "errors": 0.25, "power": 0.25}
_MULTIVARIATE = ("hotelling", "hotelling-pooled", "maxt")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "table1"
    n_units: int = 1000
    sims: int = 500
    draws_omega: int = 500
    draws_gauss: int = 2000
    alpha: Optional[float] = None
    effect: Optional[str] = None
    tau: float = DEFAULT_EFFECT
    threshold: float = 1.0
    dim: int = TABLE2_DIM
    seed: int = 20240101
    threads: int = 1

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"Unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.sims < 1:
            raise ConfigError(f"sims must be at least 1, got {self.sims}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", _DEFAULT_ALPHA[self.scenario])
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        effect = self.effect or _DEFAULT_EFFECT[self.scenario]
        if effect not in _ALLOWED_EFFECTS[self.scenario]:
            raise ConfigError(
                f"Scenario {self.scenario!r} supports effects {_ALLOWED_EFFECTS[self.scenario]}, got {effect!r}"
            )
        object.__setattr__(self, "effect", effect)

    @property
    def setting(self) -> str:
        return f"{self.effect}, N={self.n_units}"

    def to_dict(self) -> Dict[str, object]:
        payload = asdict(self)
        payload.pop("threads")
        return payload


@dataclass
class ScenarioResult:
    rates: pd.DataFrame
    pvalues: pd.DataFrame
    config: Dict[str, object]
    completed: int
    interrupted: bool = False
    output_dir: Optional[Path] = None
    files: List[Path] = field(default_factory=list)


def large_sample_test(
    study: ObservedStudy,
    space: AssignmentSpace,
    spec: StatisticSpec,
    estimator: Optional[EstimatorSpec] = None,
    gauss: Optional[GaussEngineConfig] = None,
) -> float:
    """``1 - g_z``: the Gaussian-approximation p-value, without a randomization loop."""
    estimator = estimator or EstimatorSpec("dim")
    gauss = gauss or GaussEngineConfig(draws=settings.draws_gauss, seed=settings.seed)
    criterion = space.criterion
    _, vhat, eta, statistic = statistic_for_assignment(study, study.assignment, spec, estimator, criterion)
    return pushforward_cdf(vhat, spec, eta, criterion, statistic, gauss, stream_index=0).tail


def _population(cfg: ScenarioConfig, sim_seed: int) -> FinitePopulation:
    rng = substream(sim_seed, Purpose.POPULATION, 0)
    if cfg.scenario == "table1":
        return generate_table1_population(cfg.n_units, rng, effect=cfg.effect, tau=cfg.tau)
    return generate_table2_population(cfg.n_units, rng, effect=cfg.effect, tau=cfg.tau, dim=cfg.dim)


def _space(cfg: ScenarioConfig, pop: FinitePopulation) -> AssignmentSpace:
    n1 = int(round(TREATED_FRACTION * cfg.n_units))
    if cfg.scenario == "table1":
        return AssignmentSpace.rerandomized(pop.x, n1, table1_criterion(cfg.threshold))
    return AssignmentSpace.cre(cfg.n_units, n1)


def run_simulation(cfg: ScenarioConfig, index: int) -> List[Tuple[str, float]]:
    """P-values of every method in the scenario's battery for simulation ``index``."""
    sim_seed = child_seed(cfg.seed, Purpose.POPULATION, index)
    pop = _population(cfg, sim_seed)
    space = _space(cfg, pop)
    study = pop.observe(space.draw(sim_seed, 0))
    frt_cfg = FRTConfig(
        mode="sampled",
        draws_omega=cfg.draws_omega,
        draws_gauss=cfg.draws_gauss,
        alpha=cfg.alpha,
        seed=sim_seed,
        threads=1,
    )

    results: List[Tuple[str, float]] = []
    if cfg.scenario == "table1":
        dim = StatisticSpec.from_name("dim")
        student = StatisticSpec.from_name("student")
        results.append(("frt_unstudentized", raw_statistic_test(study, space, dim, cfg=frt_cfg).p_value))
        results.append(("frt_studentized", raw_statistic_test(study, space, student, cfg=frt_cfg).p_value))
        report = randomization_test(study, space, dim, cfg=frt_cfg)
        results.append(("prepivoted", report.p_value))
        results.append(("large_sample", report.large_sample_p_value))
        return results

    for name in _MULTIVARIATE:
        spec = StatisticSpec.from_name(name)
        results.append((f"{name}_frt", raw_statistic_test(study, space, spec, cfg=frt_cfg).p_value))
        report = randomization_test(study, space, spec, cfg=frt_cfg)
        results.append((f"{name}_prepivoted", report.p_value))
        results.append((f"{name}_large_sample", report.large_sample_p_value))
    return results


def rejection_rates(pvalues: pd.DataFrame, alpha: float, setting: str) -> pd.DataFrame:
    """Rejection frequency and binomial standard error per method."""
    if pvalues.empty:
        return pd.DataFrame(columns=["method", "setting", "rate", "se"])
    grouped = pvalues.assign(reject=pvalues["p_value"] <= alpha).groupby("method", sort=False)["reject"]
    rates = grouped.mean()
    counts = grouped.size()
    return pd.DataFrame(
        {
            "method": rates.index,
            "setting": setting,
            "rate": rates.to_numpy(),
            "se": np.sqrt(rates.to_numpy() * (1 - rates.to_numpy()) / counts.to_numpy()),
        }
    )


def _write_outputs(result: ScenarioResult, output_dir: Path) -> List[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    rates_path = output_dir / "rates.csv"
    pvalues_path = output_dir / "pvalues.csv"
    config_path = output_dir / "config.json"
    result.rates.to_csv(rates_path, index=False, float_format="%.6f")
    result.pvalues.to_csv(pvalues_path, index=False, float_format="%.17g")
    payload = {**result.config, "completed": result.completed, "interrupted": result.interrupted}
    config_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [rates_path, pvalues_path, config_path]


def run_scenario(cfg: ScenarioConfig, output_dir: Optional[Path] = None, progress: bool = True) -> ScenarioResult:
    """
    Run ``cfg.sims`` independent simulations and tabulate rejection rates.

    Parameters
    ----------
    cfg:
        Scenario, population size, Monte Carlo sizes and master seed.
    output_dir:
        When given, ``rates.csv``, ``pvalues.csv`` and ``config.json`` are
        written there, also after an interrupt (with the simulations finished so far).
    progress:
        Show a tqdm progress bar on stderr.
    """
    batch = max(1, cfg.threads * 4)
    records: List[dict] = []
    completed = 0
    interrupted = False
    logger.info("Running scenario %s (%s) with %d simulations", cfg.scenario, cfg.setting, cfg.sims)

    with tqdm(total=cfg.sims, desc=cfg.scenario, disable=not progress) as bar:
        try:
            for start in range(0, cfg.sims, batch):
                indices = list(range(start, min(start + batch, cfg.sims)))
                outcomes = ordered_map(lambda i: run_simulation(cfg, i), indices, threads=cfg.threads)
                for index, rows in zip(indices, outcomes):
                    records.extend({"sim": index, "method": m, "p_value": p} for m, p in rows)
                completed += len(indices)
                bar.update(len(indices))
        except KeyboardInterrupt:
            interrupted = True
            logger.warning("Interrupted after %d of %d simulations; flushing partial results", completed, cfg.sims)

    pvalues = pd.DataFrame.from_records(records, columns=["sim", "method", "p_value"])
    result = ScenarioResult(
        rates=rejection_rates(pvalues, cfg.alpha, cfg.setting),
        pvalues=pvalues,
        config=cfg.to_dict(),
        completed=completed,
        interrupted=interrupted,
        output_dir=output_dir,
    )
    if output_dir is not None:
        result.files = _write_outputs(result, Path(output_dir))
        logger.info("Wrote scenario outputs to %s", output_dir)
    return result
