"""Schema checks for study tables."""

from __future__ import annotations

import re
from typing import Iterable, List, Optional, Tuple

import pandas as pd


OUTCOME_PATTERN = re.compile(r"^y(\d+)$")
COVARIATE_PATTERN = re.compile(r"^x(\d+)$")
ASSIGNMENT_COLUMN = "z"


def _numbered(columns: Iterable[str], pattern: re.Pattern) -> List[Tuple[int, str]]:
    found = []
    for column in columns:
        match = pattern.match(column)
        if match:
            found.append((int(match.group(1)), column))
    return sorted(found)


def outcome_columns(columns: Iterable[str]) -> List[str]:
    return [name for _, name in _numbered(columns, OUTCOME_PATTERN)]


def covariate_columns(columns: Iterable[str]) -> List[str]:
    return [name for _, name in _numbered(columns, COVARIATE_PATTERN)]


def _check_consecutive(columns: Iterable[str], pattern: re.Pattern, prefix: str) -> List[str]:
    indices = [idx for idx, _ in _numbered(columns, pattern)]
    expected = list(range(1, len(indices) + 1))
    if indices != expected:
        return [f"{prefix} columns must be numbered {prefix}1..{prefix}{len(indices)}, found {indices}"]
    return []


def validate_study_frame(
    frame: pd.DataFrame, pairs_column: Optional[str] = "pair"
) -> Tuple[bool, List[str]]:
    """Return (is_valid, messages) for a raw study table."""

    messages: List[str] = []
    columns = list(frame.columns)

    if ASSIGNMENT_COLUMN not in columns:
        messages.append(f"missing assignment column '{ASSIGNMENT_COLUMN}'")
    if not outcome_columns(columns):
        messages.append("missing outcome columns: expected at least 'y1'")
    messages.extend(_check_consecutive(columns, OUTCOME_PATTERN, "y"))
    messages.extend(_check_consecutive(columns, COVARIATE_PATTERN, "x"))

    if frame.empty:
        messages.append("table has no rows")

    numeric = outcome_columns(columns) + covariate_columns(columns)
    if ASSIGNMENT_COLUMN in columns:
        numeric.append(ASSIGNMENT_COLUMN)
    for column in numeric:
        values = pd.to_numeric(frame[column], errors="coerce")
        if values.isna().any():
            rows = frame.index[values.isna()].tolist()[:5]
            messages.append(f"column '{column}' has missing or non-numeric values (rows {rows})")

    if pairs_column and pairs_column in columns and frame[pairs_column].isna().any():
        messages.append(f"pair column '{pairs_column}' has missing values")

    return not messages, messages
