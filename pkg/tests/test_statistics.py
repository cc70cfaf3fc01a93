from __future__ import annotations

import numpy as np
import pytest

from prepivot.errors import ConfigError, DecompositionError, DimensionMismatchError
from prepivot.models import CovEstimate, NAMED, StatisticSpec, compute_xi, evaluate, evaluate_rows


def _random_eta(family: str, d: int, rng: np.random.Generator):
    if family == "abs":
        return float(rng.uniform(0.5, 2.0))
    if family == "quad_form":
        a = rng.normal(size=(d, d))
        return a @ a.T + d * np.eye(d)
    if family == "max_abs_t":
        return rng.uniform(0.5, 2.0, size=d)
    return 1.0


def test_hand_examples():
    assert evaluate(StatisticSpec("quad_form"), np.eye(2), [3.0, 4.0]) == pytest.approx(25.0)
    assert evaluate(StatisticSpec("max_abs_t"), np.array([1.0, 2.0]), [-2.0, 6.0]) == pytest.approx(3.0)
    assert evaluate(StatisticSpec("l2_norm"), 1.0, [3.0, 4.0]) == pytest.approx(5.0)
    assert evaluate(StatisticSpec("abs"), 2.0, [-3.0]) == pytest.approx(1.5)


@pytest.mark.parametrize("family", ["abs", "quad_form", "max_abs_t", "l2_norm"])
def test_zero_at_origin_and_nonnegative(family, rng):
    d = 1 if family == "abs" else 3
    eta = _random_eta(family, d, rng)
    spec = StatisticSpec(family)
    assert evaluate(spec, eta, np.zeros(d)) == 0.0
    assert (evaluate_rows(spec, eta, rng.normal(size=(200, d))) >= 0).all()


@pytest.mark.parametrize("family", ["abs", "quad_form", "max_abs_t", "l2_norm"])
def test_mirror_symmetry(family, rng):
    spec = StatisticSpec(family)
    d = 1 if family == "abs" else 4
    for _ in range(10):
        eta = _random_eta(family, d, rng)
        t = rng.normal(size=(100, d)) * 3.0
        np.testing.assert_allclose(evaluate_rows(spec, eta, t), evaluate_rows(spec, eta, -t), rtol=1e-12)


@pytest.mark.parametrize("family", ["abs", "quad_form", "max_abs_t", "l2_norm"])
def test_quasi_convexity(family, rng):
    spec = StatisticSpec(family)
    d = 1 if family == "abs" else 3
    eta = _random_eta(family, d, rng)
    a = rng.normal(size=(500, d))
    b = rng.normal(size=(500, d))
    lam = rng.uniform(size=(500, 1))
    mixed = evaluate_rows(spec, eta, lam * a + (1 - lam) * b)
    bound = np.maximum(evaluate_rows(spec, eta, a), evaluate_rows(spec, eta, b))
    assert (mixed <= bound + 1e-10).all()


@pytest.mark.parametrize("family", ["abs", "quad_form", "max_abs_t", "l2_norm"])
def test_continuity(family, rng):
    spec = StatisticSpec(family)
    d = 1 if family == "abs" else 3
    eta = _random_eta(family, d, rng)
    t = rng.normal(size=(50, d))
    nudged = t + 1e-9 * rng.normal(size=t.shape)
    np.testing.assert_allclose(evaluate_rows(spec, eta, t), evaluate_rows(spec, eta, nudged), atol=1e-6)


def test_non_positive_definite_parameter_raises():
    with pytest.raises(DecompositionError):
        evaluate(StatisticSpec("quad_form"), np.array([[1.0, 2.0], [2.0, 1.0]]), [1.0, 1.0])
    with pytest.raises(DecompositionError):
        evaluate(StatisticSpec("abs"), 0.0, [1.0])
    with pytest.raises(DimensionMismatchError):
        evaluate(StatisticSpec("abs"), 1.0, [1.0, 2.0])


def test_named_statistics():
    assert StatisticSpec.from_name("hotelling") == StatisticSpec("quad_form", "neyman_ttblock")
    assert StatisticSpec.from_name("student") == StatisticSpec("abs", "diag_sqrt_neyman")
    for name in NAMED:
        assert StatisticSpec.from_name(name).name == name
    assert StatisticSpec("quad_form", "unit").name == "quad_form/unit"
    with pytest.raises(ConfigError):
        StatisticSpec.from_name("wilcoxon")
    with pytest.raises(ConfigError):
        StatisticSpec("abs", "bootstrap")


def test_compute_xi_recipes(univariate_study):
    w = univariate_study.assignment
    assert compute_xi(StatisticSpec("abs"), univariate_study, w) == 1.0
    assert compute_xi(StatisticSpec("l2_norm"), univariate_study, w) == 1.0

    diagonal = CovEstimate(v=np.diag([4.0, 9.0]), m=2)
    np.testing.assert_allclose(compute_xi(StatisticSpec("max_abs_t", "diag_sqrt_neyman"), univariate_study, w, diagonal), [2.0, 3.0])
    np.testing.assert_array_equal(compute_xi(StatisticSpec("quad_form"), univariate_study, w, diagonal), np.eye(2))
    np.testing.assert_array_equal(
        compute_xi(StatisticSpec("quad_form", "neyman_ttblock"), univariate_study, w, diagonal), np.diag([4.0, 9.0])
    )

    y = univariate_study.outcomes[:, 0]
    s1 = y[w == 1].var(ddof=1)
    s0 = y[w == 0].var(ddof=1)
    student = compute_xi(StatisticSpec("abs", "diag_sqrt_neyman"), univariate_study, w)
    assert student == pytest.approx(np.sqrt(12 * (s1 / 6 + s0 / 6)), rel=1e-10)
    pooled_xi = compute_xi(StatisticSpec("quad_form", "pooled"), univariate_study, w)
    assert pooled_xi[0, 0] == pytest.approx(4.0 * (5 * s1 + 5 * s0) / 10, rel=1e-10)
