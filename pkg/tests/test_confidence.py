from __future__ import annotations

import logging
import os

import numpy as np
import pytest

from prepivot.data import FinitePopulation, ObservedStudy
from prepivot.design import AssignmentSpace
from prepivot.errors import ConfigError
from prepivot.inference import confidence_set, parse_grid, randomization_test
from prepivot.models import StatisticSpec


slow = pytest.mark.skipif(not os.getenv("PREPIVOT_RUN_SLOW"), reason="set PREPIVOT_RUN_SLOW=1 for full-size runs")


def test_parse_grid():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("-1:-1:0.5") == [-1.0]
    assert len(parse_grid("0:1:0.1")) == 11
    for text in ("0:1", "a:b:c", "1:0:0.1", "0:1:0"):
        with pytest.raises(ConfigError):
            parse_grid(text)


def test_true_effect_is_covered_exactly(exact_cfg, rng):
    effect = 1.5
    y0 = np.round(rng.normal(size=8) * 4) / 4
    pop = FinitePopulation(y1=y0 + effect, y0=y0, x=np.zeros((8, 0)))
    space = AssignmentSpace.cre(8, 4)
    spec = StatisticSpec.from_name("student")
    covered = [
        randomization_test(pop.observe(w), space, spec, cfg=exact_cfg, null_shift=effect).p_value > 0.1
        for w in space.enumerate()
    ]
    assert sum(covered) >= 0.9 * 70


@slow
def test_true_effect_is_covered_over_every_assignment(exact_cfg, rng):
    effect = 1.5
    y0 = np.round(rng.normal(size=10) * 4) / 4
    pop = FinitePopulation(y1=y0 + effect, y0=y0, x=np.zeros((10, 0)))
    space = AssignmentSpace.cre(10, 5)
    spec = StatisticSpec.from_name("student")
    rows = space.enumerate()
    assert rows.shape[0] == 252
    covered = [
        randomization_test(pop.observe(w), space, spec, cfg=exact_cfg, null_shift=effect).p_value > 0.10
        for w in rows
    ]
    assert sum(covered) >= 0.90 * 252


def test_confidence_set_contains_effect_when_test_accepts(exact_cfg, rng):
    y0 = np.round(rng.normal(size=8) * 4) / 4
    pop = FinitePopulation(y1=y0 + 1.0, y0=y0, x=np.zeros((8, 0)))
    study = pop.observe([1, 0] * 4)
    space = AssignmentSpace.cre(8, 4)
    spec = StatisticSpec.from_name("dim")
    result = confidence_set(study, space, spec, parse_grid("-2:4:0.25"), cfg=exact_cfg)
    at_truth = randomization_test(study, space, spec, cfg=exact_cfg, null_shift=1.0).p_value
    assert ([1.0] in result.accepted) == (at_truth > exact_cfg.alpha)
    assert len(result.p_values) == len(result.grid) == 25
    assert result.bounds is None or result.bounds[0] <= result.bounds[1]
    assert result.to_dict()["alpha"] == exact_cfg.alpha


def test_shifting_treated_outcomes_shifts_the_set(exact_cfg, rng):
    w = np.array([1, 0] * 4)
    y = np.round(rng.normal(size=8) * 4) / 4 + 0.5 * w
    space = AssignmentSpace.cre(8, 4)
    spec = StatisticSpec.from_name("dim")
    grid = parse_grid("-1:2:0.25")
    study = ObservedStudy(outcomes=y, assignment=w, covariates=np.zeros((8, 0)))
    moved = study.with_outcomes(y + 0.5 * w)
    base = confidence_set(study, space, spec, grid, cfg=exact_cfg)
    shifted = confidence_set(moved, space, spec, [c + 0.5 for c in grid], cfg=exact_cfg)
    assert base.p_values == shifted.p_values
    assert [[c[0] + 0.5] for c in base.accepted] == shifted.accepted
    assert base.is_interval == shifted.is_interval


def test_empty_set_warns(exact_cfg, rng, caplog, monkeypatch):
    monkeypatch.setattr(logging.getLogger("prepivot.inference.confidence"), "propagate", True)
    w = np.array([1, 0] * 4)
    pop = FinitePopulation(y1=rng.normal(size=8), y0=rng.normal(size=8), x=np.zeros((8, 0)))
    result = confidence_set(pop.observe(w), AssignmentSpace.cre(8, 4), StatisticSpec.from_name("dim"), [50.0, 51.0], cfg=exact_cfg)
    assert result.accepted == []
    assert not result.is_interval
    assert result.bounds is None
    assert "Confidence set is empty" in caplog.text


def test_empty_grid_is_rejected(exact_cfg, univariate_study):
    space = AssignmentSpace.cre(12, 6)
    with pytest.raises(ConfigError):
        confidence_set(univariate_study, space, StatisticSpec.from_name("dim"), [], cfg=exact_cfg)
