"""Small helpers for the command line: x-grid parsing, log10 output and CSV rows."""

from __future__ import annotations

import csv
import math
from typing import Any, Iterable, Mapping, Optional, Sequence, TextIO

import numpy as np

CSV_SCHEMA_VERSION = 1
_LN10 = math.log(10.0)


def parse_x_grid(text: str, *, geometric: bool = False) -> list[float]:
    """Parse ``lo:hi:count``, a comma list, or a single value into x-values."""
    if text is None or not str(text).strip():
        raise ValueError("an x value or grid is required")
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"x grid must look like lo:hi:count, got {text!r}")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ValueError(f"x grid must look like lo:hi:count, got {text!r}") from exc
        if count < 1:
            raise ValueError(f"x grid count must be positive, got {count}")
        if not lo <= hi:
            raise ValueError(f"x grid needs lo <= hi, got {lo} and {hi}")
        if geometric:
            if lo <= 0.0:
                raise ValueError("a geometric x grid needs lo > 0")
            return [float(v) for v in np.geomspace(lo, hi, count)]
        return [float(v) for v in np.linspace(lo, hi, count)]
    return parse_float_list(text)


def parse_float_list(text: str) -> list[float]:
    values = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(float(item))
        except ValueError as exc:
            raise ValueError(f"not a number: {item!r}") from exc
    if not values:
        raise ValueError(f"no numbers in {text!r}")
    return values


def to_log10(log_value: float) -> float:
    """Natural-log value to log10."""
    return log_value / _LN10


def present_probability(log_value: Optional[float], log10: bool = True) -> Optional[float]:
    """A natural-log probability as log10, or as a plain probability when ``log10`` is off."""
    if log_value is None:
        return None
    return to_log10(log_value) if log10 else math.exp(log_value)


def probability_fields(name: str, log_value: float, log10: bool = True) -> dict[str, float]:
    if log10:
        return {f"log10_{name}": to_log10(log_value)}
    return {name: math.exp(log_value)}


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def csv_header(command: str) -> str:
    return f"# weibull-tails {command} v{CSV_SCHEMA_VERSION}"


def write_csv(
    stream: TextIO,
    command: str,
    rows: Sequence[Mapping[str, Any]],
    columns: Optional[Sequence[str]] = None,
) -> None:
    """Write a versioned header comment followed by one CSV line per row."""
    if columns is None:
        columns = _union_columns(rows)
    stream.write(csv_header(command) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in columns])


def _union_columns(rows: Iterable[Mapping[str, Any]]) -> list[str]:
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns
