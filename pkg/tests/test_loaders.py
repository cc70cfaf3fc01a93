from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from prepivot.data import ObservedStudy, load_study, validate_study_frame, write_study
from prepivot.errors import SchemaError


def _frame() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "y1": [1.0, 2.5, 3.0, 4.25],
            "y2": [0.0, -1.0, 2.0, 1.0],
            "z": [1, 0, 1, 0],
            "x1": [0.1, 0.2, 0.3, 0.4],
        }
    )


def test_load_study_reads_schema(tmp_path):
    path = tmp_path / "study.csv"
    _frame().to_csv(path, index=False)
    study = load_study(path)
    assert study.outcome_dim == 2
    assert study.covariate_dim == 1
    assert study.arm_sizes == (2, 2)
    np.testing.assert_array_equal(study.assignment, [1, 0, 1, 0])


def test_missing_assignment_column_is_reported(tmp_path):
    path = tmp_path / "study.csv"
    _frame().drop(columns="z").to_csv(path, index=False)
    with pytest.raises(SchemaError, match="'z'"):
        load_study(path)


def test_missing_values_are_rejected(tmp_path):
    frame = _frame()
    frame.loc[2, "y2"] = np.nan
    path = tmp_path / "study.csv"
    frame.to_csv(path, index=False)
    with pytest.raises(SchemaError, match="y2"):
        load_study(path)


def test_validator_flags_gaps_in_numbering():
    frame = _frame().rename(columns={"y2": "y3"})
    valid, messages = validate_study_frame(frame)
    assert not valid
    assert any("y1..y2" in message for message in messages)


def test_write_then_load_preserves_study(tmp_path, rng):
    study = ObservedStudy(
        outcomes=rng.normal(size=(6, 1)),
        assignment=[1, 0, 0, 1, 1, 0],
        covariates=rng.normal(size=(6, 2)),
        pairs=[0, 0, 1, 1, 2, 2],
    )
    path = write_study(study, tmp_path / "out" / "study.csv")
    loaded = load_study(path)
    np.testing.assert_array_equal(loaded.outcomes, study.outcomes)
    np.testing.assert_array_equal(loaded.covariates, study.covariates)
    np.testing.assert_array_equal(loaded.pairs, study.pairs)
