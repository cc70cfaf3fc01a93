"""Simulation studies: generative models and batch drivers."""

from .scenarios import (
    TABLE2_DIM,
    generate_table1_population,
    generate_table2_population,
    table1_criterion,
    table1_metric,
)
from .simulate import (
    SCENARIOS,
    ScenarioConfig,
    ScenarioResult,
    large_sample_test,
    rejection_rates,
    run_scenario,
    run_simulation,
)

__all__ = [
    "SCENARIOS",
    "TABLE2_DIM",
    "ScenarioConfig",
    "ScenarioResult",
    "generate_table1_population",
    "generate_table2_population",
    "large_sample_test",
    "rejection_rates",
    "run_scenario",
    "run_simulation",
    "table1_criterion",
    "table1_metric",
]
