from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from prepivot.config import Settings
from prepivot.data import FinitePopulation, ObservedStudy
from prepivot.inference import FRTConfig


@pytest.fixture()
def settings_tmp(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Settings:
    """Provide isolated settings whose reports directory lives under tmp_path."""
    root = tmp_path / "project"
    settings = Settings(
        root=root,
        reports=root / "reports",
        seed=123,
        threads=1,
        draws_gauss=1000,
        draws_omega=200,
        enumeration_cap=1_000_000,
        max_attempts=10_000,
    )
    settings.ensure()

    # Monkeypatch modules that cache the global `settings`.
    import prepivot.cli as cli_module
    import prepivot.config as config_module
    import prepivot.design.spaces as spaces_module
    import prepivot.inference.frt as frt_module

    monkeypatch.setattr(config_module, "settings", settings, raising=False)
    monkeypatch.setattr(cli_module, "settings", settings, raising=False)
    monkeypatch.setattr(spaces_module, "settings", settings, raising=False)
    monkeypatch.setattr(frt_module, "settings", settings, raising=False)
    return settings


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture()
def exact_cfg() -> FRTConfig:
    return FRTConfig(mode="exact", draws_gauss=500, seed=7, threads=1)


@pytest.fixture()
def univariate_study(rng) -> ObservedStudy:
    """N=12 study with one outcome, two covariates and six treated units."""
    n = 12
    x = rng.normal(size=(n, 2))
    w = np.array([1, 0] * 6)
    y = 1.0 + x @ np.array([0.5, -0.3]) + rng.normal(size=n) + 0.4 * w
    return ObservedStudy(outcomes=y, assignment=w, covariates=x)


@pytest.fixture()
def sharp_population(rng) -> FinitePopulation:
    """N=10 population with no effect for any unit."""
    y = rng.normal(size=10)
    return FinitePopulation(y1=y, y0=y, x=rng.normal(size=(10, 1)))
