"""Point-set I/O: CSV and JSONL readers, CSV writers, JSON sidecars."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InputError


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path, id_column: bool | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    """Read one point per row. A header row is detected when its cells are
    not numeric; a leading id column is used when ``id_column`` is true, or
    when left as ``None`` and the header names the first column ``id``."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"no rows in {path}")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if id_column is None:
        id_column = bool(header) and header[0].lower() == "id"
    try:
        table = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"non-numeric cell in {path}: {exc}") from None
    if table.ndim != 2 or table.shape[0] == 0:
        raise InputError(f"ragged or empty table in {path}")
    if id_column:
        ids = table[:, 0]
        if not np.all(ids == np.round(ids)):
            raise InputError("id column must hold integers")
        return table[:, 1:], ids.astype(np.int64)
    return table, None


def read_jsonl(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read ``{"id": ..., "x": [...]}`` objects, one per line."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    pts, ids = [], []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pts.append([float(v) for v in obj["x"]])
                ids.append(obj.get("id"))
            except (ValueError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: bad record ({exc})") from None
    if not pts or len({len(p) for p in pts}) != 1:
        raise InputError(f"empty or ragged point list in {path}")
    if all(i is None for i in ids):
        return np.array(pts), None
    if any(i is None for i in ids):
        raise InputError("either every record carries an id or none does")
    return np.array(pts), np.array(ids, dtype=np.int64)


def read_points(path, fmt: str = "csv", id_column: bool | None = None):
    if fmt == "csv":
        return read_csv(path, id_column)
    if fmt == "jsonl":
        return read_jsonl(path)
    raise InputError(f"unknown format {fmt!r}")


def write_csv(path, points: np.ndarray, ids: np.ndarray, weights: np.ndarray | None = None) -> None:
    """Write ``id, x0, ..., [weight]`` rows with round-trip float formatting."""
    points = np.atleast_2d(points)
    cols = ["id"] + [f"x{j}" for j in range(points.shape[1])]
    if weights is not None:
        cols.append("weight")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i in range(points.shape[0]):
            row = [int(ids[i])] + [repr(float(v)) for v in points[i]]
            if weights is not None:
                row.append(repr(float(weights[i])))
            w.writerow(row)


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, numpy scalars and arrays unwrapped."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
