from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from prepivot.design import AssignmentSpace, BalanceCriterion, covariate_metric, is_balanced, pair_members
from prepivot.errors import (
    DecompositionError,
    EnumerationTooLargeError,
    InfeasibleBalanceError,
    InvalidDesignError,
)
from prepivot.pipeline import generate_table1_population, table1_criterion
from prepivot.utils import substream


def test_enumerate_cre_is_lexicographic():
    rows = AssignmentSpace.cre(4, 2).enumerate()
    assert rows.shape == (6, 4)
    assert rows[0].tolist() == [0, 0, 1, 1]
    assert rows[-1].tolist() == [1, 1, 0, 0]
    assert [tuple(r) for r in rows] == sorted(tuple(r) for r in rows)
    assert len({r.tobytes() for r in rows}) == 6


def test_enumerate_paired_assigns_one_per_pair():
    space = AssignmentSpace.paired(n_pairs=3)
    rows = space.enumerate()
    assert rows.shape == (8, 6)
    assert space.cardinality() == 8
    for i, j in space.pairs:
        assert np.all(rows[:, i] + rows[:, j] == 1)
    assert [tuple(r) for r in rows] == sorted(tuple(r) for r in rows)


def test_enumerate_multiarm_counts():
    space = AssignmentSpace.multiarm([2, 1, 2])
    rows = space.enumerate()
    assert rows.shape[0] == space.cardinality() == 30
    assert all(tuple(np.bincount(r, minlength=3)) == (2, 1, 2) for r in rows)


def test_rerandomized_space_filters_cre(rng):
    x = rng.normal(size=(10, 2))
    full = AssignmentSpace.cre(10, 5).enumerate()
    trivial = AssignmentSpace.rerandomized(x, 5, BalanceCriterion.none()).enumerate()
    np.testing.assert_array_equal(trivial, full)

    space = AssignmentSpace.rerandomized(x, 5, BalanceCriterion.mahalanobis(1.0))
    rows = space.enumerate()
    assert 0 < rows.shape[0] <= full.shape[0]
    assert space.cardinality() is None
    for row in rows:
        assert is_balanced(space.criterion, space.scaled_deltas(row)[0])


def test_enumeration_cap():
    with pytest.raises(EnumerationTooLargeError, match="sampled"):
        AssignmentSpace.cre(30, 15).enumerate(cap=1_000_000)


def test_sample_uniform_frequencies_cre_4_2():
    space = AssignmentSpace.cre(4, 2)
    draws = space.sample_uniform(60_000, seed=11)
    keys, counts = np.unique(draws, axis=0, return_counts=True)
    assert keys.shape[0] == 6
    p = 1 / 6
    se = np.sqrt(p * (1 - p) / 60_000)
    assert np.all(np.abs(counts / 60_000 - p) <= 4 * se)


def test_sample_uniform_matches_enumeration_cre_6_3():
    space = AssignmentSpace.cre(6, 3)
    draws = space.sample_uniform(100_000, seed=3)
    keys, counts = np.unique(draws, axis=0, return_counts=True)
    np.testing.assert_array_equal(keys, space.enumerate())
    p = 1 / 20
    se = np.sqrt(p * (1 - p) / 100_000)
    assert np.all(np.abs(counts / 100_000 - p) <= 4 * se)


def test_sampling_is_independent_of_threads(rng):
    space = AssignmentSpace.rerandomized(rng.normal(size=(40, 2)), 20, BalanceCriterion.mahalanobis(1.0))
    single = space.sample_uniform(24, seed=5, threads=1)
    pooled = space.sample_uniform(24, seed=5, threads=2)
    np.testing.assert_array_equal(single, pooled)
    assert all(space.contains(row) for row in single)


def test_infeasible_balance(rng):
    x = rng.normal(size=(20, 2))
    space = AssignmentSpace.rerandomized(x, 10, BalanceCriterion.mahalanobis(1e-14))
    with pytest.raises(InfeasibleBalanceError) as info:
        space.sample_uniform(1, seed=0, max_attempts=64)
    assert info.value.attempts == 64
    assert info.value.accepted == 0
    assert info.value.acceptance_rate == 0.0
    assert "64 attempts" in str(info.value)

    small = AssignmentSpace.rerandomized(x[:10], 5, BalanceCriterion.mahalanobis(1e-14))
    with pytest.raises(InfeasibleBalanceError) as info:
        small.enumerate()
    assert info.value.attempts == 252


def test_is_balanced_examples(rng):
    criterion = BalanceCriterion.mahalanobis(1.0, np.eye(3))
    assert is_balanced(criterion, np.zeros(3))
    assert not is_balanced(criterion, np.array([2.0, 0.0, 0.0]))
    assert is_balanced(criterion, np.array([1.0, 0.0, 0.0]))
    for _ in range(100):
        b = rng.normal(size=3)
        assert is_balanced(criterion, b) == is_balanced(criterion, -b)
    assert is_balanced(BalanceCriterion.none(), np.array([1e6]))


def test_non_positive_definite_metric_rejected():
    with pytest.raises(DecompositionError):
        BalanceCriterion.mahalanobis(1.0, np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_custom_criterion_checks():
    box = BalanceCriterion.custom(lambda b: bool(np.all(np.abs(b) <= 1.0)), dim=2)
    assert is_balanced(box, np.array([0.5, -0.5]))

    with pytest.raises(InvalidDesignError, match="symmetric"):
        BalanceCriterion.custom(lambda b: bool(b[0] <= 0.5), dim=2)
    with pytest.raises(InvalidDesignError, match="convex"):
        BalanceCriterion.custom(lambda b: bool(min(abs(b[0]), abs(b[1])) <= 0.1), dim=2)


def test_covariate_metric_matches_design_covariance(rng):
    x = rng.normal(size=(8, 2))
    space = AssignmentSpace.rerandomized(x, 3, BalanceCriterion.none())
    deltas = space.scaled_deltas(space.enumerate())
    assert deltas.shape == (56, 2)
    design_cov = np.cov(deltas, rowvar=False, ddof=0)
    np.testing.assert_allclose(covariate_metric(x, 3), design_cov, rtol=1e-10, atol=1e-10)


def test_table1_acceptance_rate():
    pop = generate_table1_population(1000, substream(2024, 3, 0), effect="weak")
    space = AssignmentSpace.rerandomized(pop.x, 200, table1_criterion(1.0))
    rate = space.acceptance_rate(20_000, seed=9)
    assert 0.17 <= rate <= 0.23
    assert stats.chi2.cdf(1.0, df=3) == pytest.approx(0.199, abs=1e-3)


def test_pair_members():
    assert pair_members(None, 4) == ((0, 1), (2, 3))
    assert pair_members(["b", "a", "a", "b"], 4) == ((0, 3), (1, 2))
    with pytest.raises(InvalidDesignError):
        pair_members([0, 0, 0, 1], 4)
