"""File formats: dataset CSV, JSON with 17-significant-digit numbers, atomic writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .distributions import BivariateSample

__all__ = [
    "DatasetError",
    "format_float",
    "dumps_json",
    "atomic_write_text",
    "read_dataset",
    "write_dataset",
    "dataset_text",
]


class DatasetError(ValueError):
    """Dataset validation failure; ``rows`` lists ``(row_number, message)`` pairs (1-based data rows)."""

    def __init__(self, message: str, rows: list[tuple[int, str]] | None = None):
        self.rows = rows or []
        detail = "".join(f"\n  row {r}: {m}" for r, m in self.rows)
        super().__init__(message + detail)


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def _dump(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{_dump(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON text whose floats carry 17 significant digits (non-finite floats become null)."""
    return _dump(obj, indent, 0) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the destination directory, then rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def dataset_text(sample: BivariateSample) -> str:
    lines = ["x,y"]
    lines += [f"{format_float(x)},{format_float(y)}" for x, y in zip(sample.x, sample.y)]
    return "\n".join(lines) + "\n"


def write_dataset(sample: BivariateSample, path) -> None:
    atomic_write_text(path, dataset_text(sample))


def read_dataset(path) -> BivariateSample:
    """Parse an ``x,y`` CSV.  Every offending row is reported, not just the first."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip().lstrip("﻿") != "x,y":
        raise DatasetError("dataset header must be exactly 'x,y'")
    xs, ys, problems = [], [], []
    for row, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 2:
            problems.append((row, f"expected 2 fields, got {len(fields)}"))
            continue
        try:
            x, y = float(fields[0]), float(fields[1])
        except ValueError:
            problems.append((row, f"not a pair of decimal numbers: {line!r}"))
            continue
        bad = [name for name, v in (("x", x), ("y", y)) if not (math.isfinite(v) and v > 0)]
        if bad:
            problems.append((row, f"{' and '.join(bad)} must be positive (got x={fields[0]}, y={fields[1]})"))
            continue
        xs.append(x)
        ys.append(y)
    if problems:
        raise DatasetError(f"{path}: {len(problems)} invalid row(s)", problems)
    if not xs:
        raise DatasetError(f"{path}: no data rows")
    return BivariateSample(np.array(xs), np.array(ys))
