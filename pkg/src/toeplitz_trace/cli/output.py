"""Rendering of command results as JSON, CSV or an aligned text table."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def plain(value):
    """Convert numpy scalars, arrays and complex numbers into JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [plain(float(value.real)), plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def to_json(payload: dict) -> str:
    # float repr is the shortest string that round-trips, so output is byte-stable
    return json.dumps(plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(value, digits: int) -> str:
    value = plain(value)
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, float) for v in value):
        re, im = value
        return f"{re:.{digits}g}" if im == 0 else f"{re:.{digits}g}{im:+.{digits}g}j"
    if value is None:
        return ""
    return str(value)


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c), 12) for c in columns])
    return buf.getvalue()


def to_table(rows: list[dict], columns: list[str], title: str = "") -> str:
    cells = [[_cell(row.get(c), 10) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
    lines = [title] if title else []
    lines.append("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"
