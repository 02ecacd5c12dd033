"""Reading matrices, vectors and cone specs from disk; JSON output helpers.

Matrices are JSON 2-d arrays or CSV (comma separated, one row per line, no
header).  Vectors are JSON 1-d arrays or a single CSV row or column.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .cones import cone_from_dict

__all__ = ["dumps", "jsonable", "load_array", "load_cone", "load_matrix", "load_vector"]


def _read_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"{path}: line {i}: not a number") from None
    if not rows:
        raise ValueError(f"{path}: empty file")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: rows have different lengths")
    return np.array(rows)


def load_array(path):
    """Numeric array from a JSON or CSV file (CSV when the suffix is .csv)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        a = _read_csv(path)
    else:
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        try:
            a = np.array(data, dtype=float)
        except (TypeError, ValueError):
            raise ValueError(f"{path}: expected a (nested) array of numbers") from None
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{path}: non-finite entries")
    return a


def load_matrix(path):
    a = load_array(path)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.size == 0:
        raise ValueError(f"{path}: expected a non-empty square matrix, got shape {a.shape}")
    return a


def load_vector(path):
    """A vector, or a square matrix for operator-cone elements."""
    a = load_array(path)
    if a.ndim == 2 and 1 in a.shape:
        a = a.ravel()
    if a.ndim not in (1, 2) or a.size == 0:
        raise ValueError(f"{path}: expected a vector, got shape {a.shape}")
    return a


def load_cone(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if isinstance(data, dict) and data.get("command") == "dual" and "result" in data:
        # output of `conegroup dual`
        data = data["result"]
    return cone_from_dict(data, "cone")


def jsonable(obj):
    """Plain-Python copy of ``obj``; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj):
    """Deterministic JSON: insertion-ordered keys, shortest round-trip floats."""
    return json.dumps(jsonable(obj), indent=2, allow_nan=False)
