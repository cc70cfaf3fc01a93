"""CSV ingestion and export for observed studies."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from ..errors import SchemaError
from ..utils import get_logger
from .population import ObservedStudy
from .validators import (
    ASSIGNMENT_COLUMN,
    covariate_columns,
    outcome_columns,
    validate_study_frame,
)


logger = get_logger(__name__)


def load_study(
    path: Path,
    n_arms: Optional[int] = None,
    pairs_column: Optional[str] = "pair",
) -> ObservedStudy:
    """Load an observed study from a CSV with columns ``y1..yd``, ``z``, ``x1..xk``.

    ``n_arms`` defaults to one more than the largest arm label. A ``pairs_column``
    present in the file is carried onto the study as pair identifiers.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise SchemaError(f"Study file {path} could not be parsed: {exc}") from exc

    is_valid, messages = validate_study_frame(frame, pairs_column=pairs_column)
    if not is_valid:
        raise SchemaError(f"Study file {path} failed validation: " + "; ".join(messages))

    y_cols = outcome_columns(frame.columns)
    x_cols = covariate_columns(frame.columns)
    known = set(y_cols) | set(x_cols) | {ASSIGNMENT_COLUMN}
    if pairs_column:
        known.add(pairs_column)
    ignored = [col for col in frame.columns if col not in known]
    if ignored:
        logger.warning("Ignoring unrecognized columns in %s: %s", path, ignored)

    labels = pd.to_numeric(frame[ASSIGNMENT_COLUMN]).to_numpy()
    if not np.all(np.mod(labels, 1) == 0) or labels.min() < 0:
        raise SchemaError(f"Column '{ASSIGNMENT_COLUMN}' in {path} must hold nonnegative integer arm labels")
    labels = labels.astype(int)

    outcomes = frame[y_cols].apply(pd.to_numeric).to_numpy(dtype=float)
    if x_cols:
        covariates = frame[x_cols].apply(pd.to_numeric).to_numpy(dtype=float)
    else:
        covariates = np.zeros((len(frame), 0))
    pairs = frame[pairs_column].to_numpy() if pairs_column and pairs_column in frame.columns else None

    study = ObservedStudy(
        outcomes=outcomes,
        assignment=labels,
        covariates=covariates,
        n_arms=n_arms if n_arms is not None else max(2, int(labels.max()) + 1),
        pairs=pairs,
    )
    logger.info(
        "Loaded %s: N=%d, d=%d, k=%d, arm sizes %s",
        path.name,
        study.n_units,
        study.outcome_dim,
        study.covariate_dim,
        study.arm_sizes,
    )
    return study


def write_study(study: ObservedStudy, path: Path, pairs_column: str = "pair") -> Path:
    """Write a study to CSV in the layout ``load_study`` reads."""
    frame = pd.DataFrame(
        study.outcomes, columns=[f"y{j + 1}" for j in range(study.outcome_dim)]
    )
    frame[ASSIGNMENT_COLUMN] = study.assignment
    for j in range(study.covariate_dim):
        frame[f"x{j + 1}"] = study.covariates[:, j]
    if study.pairs is not None:
        frame[pairs_column] = study.pairs
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # repr-precision floats so a reload reproduces the study exactly
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
