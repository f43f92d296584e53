"""Formatting helpers for reports: 12 significant digits, JSON and CSV."""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Any, Optional

import numpy as np
import pandas as pd

SIGNIFICANT_DIGITS = 12
NA_TEXT = "--"
INF_TEXT = "inf"
REPORT_SCHEMA_VERSION = 1


def _is_missing(value: Optional[float]) -> bool:
    if value is None:
        return True
    try:
        return math.isnan(float(value))
    except (TypeError, ValueError):
        return False


def format_number(value: Optional[float], digits: int = SIGNIFICANT_DIGITS) -> str:
    """Decimal text with ``digits`` significant digits; infinities render as ``inf``."""
    if _is_missing(value):
        return NA_TEXT
    number = float(value)
    if math.isinf(number):
        return INF_TEXT if number > 0 else f"-{INF_TEXT}"
    return f"{number:.{digits}g}"


def format_interval(value: Optional[float], tail_bound: Optional[float]) -> str:
    """``[value, value + tail]`` for a partial sum and its certified tail."""
    if _is_missing(value):
        return NA_TEXT
    if _is_missing(tail_bound):
        return format_number(value)
    upper = float(value) + float(tail_bound)
    return f"[{format_number(value)}, {format_number(upper)}]"


def to_jsonable(value: Any) -> Any:
    """Convert report values into JSON-ready objects with rounded floats.

    Floats become numbers parsed back from their 12-digit text so the JSON
    stays numeric; infinities become the string ``inf``.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {field.name: to_jsonable(getattr(value, field.name)) for field in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return None
        if math.isinf(number):
            return INF_TEXT if number > 0 else f"-{INF_TEXT}"
        return float(format_number(number))
    if isinstance(value, pd.DataFrame):
        return [to_jsonable(row) for row in value.to_dict(orient="records")]
    return value


def render_json(report: Any) -> str:
    """Stable JSON text; key order follows the report's own order."""
    return json.dumps(to_jsonable(report), indent=2)


def render_csv(frame: pd.DataFrame) -> str:
    """CSV text with floats at 12 significant digits and exact integers."""
    working = frame.copy()
    for column in working.columns:
        if pd.api.types.is_float_dtype(working[column]):
            working[column] = working[column].map(format_number)
    return working.to_csv(index=False, lineterminator="\n")


__all__ = [
    "INF_TEXT",
    "NA_TEXT",
    "REPORT_SCHEMA_VERSION",
    "SIGNIFICANT_DIGITS",
    "format_interval",
    "format_number",
    "render_csv",
    "render_json",
    "to_jsonable",
]
