"""
Runtime settings and run-configuration files.

Defaults are resolved from the environment (optionally populated from a
``.env`` file) so scripts, the CLI, and tests share one source of truth for
seeds, Monte Carlo sizes, and output locations.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import load_dotenv

from .errors import ConfigError


load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"Environment variable {name} must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class Settings:
    """Engine defaults and canonical output directories."""

    root: Path
    reports: Path
    seed: int
    threads: int
    draws_gauss: int
    draws_omega: int
    enumeration_cap: int
    max_attempts: int

    @classmethod
    def from_env(cls) -> "Settings":
        """Instantiate settings from PREPIVOT_* env vars or built-in defaults."""
        root = Path(os.getenv("PREPIVOT_PROJECT_ROOT", Path.cwd())).resolve()
        return cls(
            root=root,
            reports=root / "reports",
            seed=_env_int("PREPIVOT_SEED", 20240101),
            threads=_env_int("PREPIVOT_THREADS", os.cpu_count() or 1),
            draws_gauss=_env_int("PREPIVOT_DRAWS_GAUSS", 10_000),
            draws_omega=_env_int("PREPIVOT_DRAWS_OMEGA", 1_000),
            enumeration_cap=_env_int("PREPIVOT_ENUMERATION_CAP", 1_000_000),
            max_attempts=_env_int("PREPIVOT_MAX_ATTEMPTS", 1_000_000),
        )

    def ensure(self) -> None:
        """Create output directories if they do not exist."""
        self.reports.mkdir(parents=True, exist_ok=True)


def load_run_config(path: Optional[Path]) -> Mapping[str, Any]:
    """Read a JSON run-configuration file; a missing path yields an empty mapping."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as handle:
            config = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"Run config {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Run config {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"Run config {path} must contain a JSON object")
    return config


settings = Settings.from_env()
