from __future__ import annotations

import numpy as np
import pytest

from prepivot.data import ObservedStudy
from prepivot.errors import VarianceUndefinedError
from prepivot.models import (
    CovEstimate,
    EstimatorSpec,
    estimate_covariance,
    multiarm_contrast,
    neyman_unpooled,
    paired_neyman,
    pooled,
    regression_covariance,
    regression_residual,
    repair_pd,
)


def _study(y, w, x=None, **kwargs) -> ObservedStudy:
    y = np.asarray(y, dtype=float)
    x = np.zeros((y.shape[0], 0)) if x is None else x
    return ObservedStudy(outcomes=y, assignment=w, covariates=x, **kwargs)


def test_neyman_hand_example():
    w = np.array([1, 1, 0, 0])
    cov = neyman_unpooled(_study([1.0, 2.0, 3.0, 4.0], w), w)
    assert cov.tt[0, 0] == pytest.approx(2.0)
    constant = neyman_unpooled(_study(np.full(4, 7.0), w), w)
    assert constant.tt[0, 0] == 0.0


def test_neyman_blocks_and_symmetry(rng):
    x = rng.normal(size=(12, 2))
    y = rng.normal(size=(12, 3))
    w = np.array([1, 0] * 6)
    cov = neyman_unpooled(_study(y, w, x=x), w)
    assert cov.v.shape == (5, 5)
    assert cov.tt.shape == (3, 3) and cov.td.shape == (3, 2) and cov.dd.shape == (2, 2)
    np.testing.assert_allclose(cov.v, cov.v.T, atol=1e-12)

    shifted = neyman_unpooled(_study(y + 5.0 * w[:, None], w, x=x), w)
    np.testing.assert_allclose(shifted.tt, cov.tt, atol=1e-10)
    np.testing.assert_array_equal(shifted.dd, cov.dd)
    moved = neyman_unpooled(_study(y + np.array([1.0, -2.0, 3.0]), w, x=x), w)
    np.testing.assert_allclose(moved.tt, cov.tt, atol=1e-10)


def test_neyman_needs_two_units_per_arm():
    w = np.array([1, 0, 0, 0, 0])
    study = _study(np.arange(5.0), np.array([1, 1, 0, 0, 0]))
    with pytest.raises(VarianceUndefinedError):
        neyman_unpooled(study, w)


def test_pooled_examples(rng):
    w = np.array([1, 1, 0, 0])
    assert pooled(_study([1.0, 2.0, 3.0, 4.0], w), w)[0, 0] == pytest.approx(2.0)
    for _ in range(100):
        y = rng.normal(size=(10, 2))
        w = rng.permutation(np.repeat([0, 1], 5))
        study = _study(y, w)
        np.testing.assert_allclose(pooled(study, w), neyman_unpooled(study, w).tt, rtol=1e-12, atol=1e-14)


def test_regression_residual_examples(rng):
    x = rng.normal(size=(12, 1))
    w = np.array([1, 0] * 6)
    exact = _study(np.where(w == 1, 2.0 + 3.0 * x[:, 0], -1.0 + 0.5 * x[:, 0]), w, x=x)
    assert regression_residual(exact, w) == pytest.approx(0.0, abs=1e-20)

    y = rng.normal(size=12)
    bare = _study(y, w)
    assert regression_residual(bare, w) == pytest.approx(neyman_unpooled(bare, w).tt[0, 0], rel=1e-12)


def test_regression_residual_matches_arm_wise_fits(rng):
    x = rng.normal(size=(30, 2))
    w = rng.permutation(np.repeat([0, 1], 15))
    y = x @ np.array([1.0, -1.0]) + rng.normal(size=30)
    expected = 0.0
    for arm in (0, 1):
        members = w == arm
        design = np.column_stack([np.ones(members.sum()), x[members]])
        beta, *_ = np.linalg.lstsq(design, y[members], rcond=None)
        resid = y[members] - design @ beta
        expected += 30 / members.sum() * resid.var(ddof=1)
    assert regression_residual(_study(y, w, x=x), w) == pytest.approx(expected, rel=1e-10)

    cov = regression_covariance(_study(y, w, x=x), w)
    assert np.all(np.abs(cov.td) < 1e-10)


def test_paired_neyman_examples():
    study = _study([2.0, 1.0, 4.0, 1.0], [1, 0, 1, 0])
    w = np.array([1, 0, 1, 0])
    assert paired_neyman(study, w)[0, 0] == pytest.approx(2.0)
    reordered = _study([4.0, 1.0, 2.0, 1.0], [1, 0, 1, 0])
    assert paired_neyman(reordered, w)[0, 0] == paired_neyman(study, w)[0, 0]
    flat = _study([3.0, 1.0, 5.0, 3.0], [1, 0, 1, 0])
    assert paired_neyman(flat, w)[0, 0] == 0.0


def test_multiarm_two_arm_reduction(rng):
    for _ in range(100):
        y = rng.normal(size=(10, 2))
        w = rng.permutation(np.repeat([0, 1], 5))
        study = _study(y, w)
        np.testing.assert_allclose(
            multiarm_contrast(study, w, [[-1.0], [1.0]]), neyman_unpooled(study, w).tt, rtol=1e-12, atol=1e-12
        )


def test_multiarm_three_arms(rng):
    w = np.repeat([0, 1, 2], 4)
    y = rng.normal(size=12)
    study = _study(y, w, n_arms=3)
    variances = [y[w == a].var(ddof=1) for a in range(3)]
    expected = 12 / 4 * variances[0] + 12 / 4 * variances[2]
    assert multiarm_contrast(study, w, [[-1.0], [0.0], [1.0]])[0, 0] == pytest.approx(expected, rel=1e-12)

    flat_arm = y.copy()
    flat_arm[w == 1] = 3.0
    flat = _study(flat_arm, w, n_arms=3)
    full = multiarm_contrast(flat, w, [[-1.0], [1.0], [0.0]])
    assert full[0, 0] == pytest.approx(12 / 4 * variances[0], rel=1e-12)


def test_repair_pd():
    singular = np.array([[1.0, 1.0], [1.0, 1.0]])
    repaired, flag, floor = repair_pd(singular)
    assert flag
    assert floor == pytest.approx(1e-10)
    assert np.linalg.eigvalsh(repaired).min() >= 0.5 * floor

    healthy = np.array([[2.0, 0.5], [0.5, 1.0]])
    same, flag, _ = repair_pd(healthy)
    assert not flag
    np.testing.assert_array_equal(same, healthy)


def test_estimate_covariance_dispatch(univariate_study):
    w = univariate_study.assignment
    dim = estimate_covariance(EstimatorSpec("dim"), univariate_study, w)
    assert isinstance(dim, CovEstimate) and dim.k == 0
    joint = estimate_covariance(EstimatorSpec("dim"), univariate_study, w, include_covariates=True)
    assert joint.k == 2
    paired = estimate_covariance(EstimatorSpec("paired"), univariate_study, w)
    assert paired.m == 1 and paired.k == 0
