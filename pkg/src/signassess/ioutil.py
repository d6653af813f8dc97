"""Serialization helpers: canonical JSON and atomic file writes.

Reports must be byte-identical across runs with the same config and seed,
so JSON is always emitted with sorted keys and repr-exact floats, and files
are written under a ``.partial`` suffix then renamed into place.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import DataError, IoError


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace variance."""
    try:
        return json.dumps(_plain(obj), sort_keys=True, allow_nan=False,
                          separators=(",", ":")) + "\n"
    except ValueError as exc:  # non-finite value
        raise DataError(f"cannot serialize non-finite value: {exc}") from exc


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write via a .partial file and rename, so partial outputs are marked."""
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        partial.write_text(text)
        os.replace(partial, path)
    except OSError as exc:
        raise IoError(f"failed writing {path}: {exc}") from exc


def write_json_atomic(path: str | Path, obj) -> None:
    write_text_atomic(path, canonical_json(obj))


def read_json(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"failed reading {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON: {exc}") from exc


def format_float(x: float) -> str:
    """Decimal text with 12 significant digits (round-trips well under 1e-9)."""
    return format(float(x), ".12g")


def write_matrix_csv(path: str | Path, mat: np.ndarray,
                     header_comment: str | None = None) -> None:
    """Write a 2-D array as bare CSV rows, optionally with a # comment line."""
    mat = np.asarray(mat, dtype=float)
    lines = []
    if header_comment is not None:
        lines.append("# " + header_comment)
    for row in mat:
        lines.append(",".join(format_float(v) for v in row))
    write_text_atomic(path, "\n".join(lines) + "\n")


def read_matrix_csv(path: str | Path, expect_cols: int | None = None):
    """Read bare CSV rows into an array; returns (matrix, comment_or_None)."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise IoError(f"failed reading {path}: {exc}") from exc
    comment = None
    rows = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if comment is None:
                comment = line.lstrip("#").strip()
            continue
        fields = line.split(",")
        if expect_cols is not None and len(fields) != expect_cols:
            raise DataError(
                f"{path}:{lineno}: expected {expect_cols} columns, "
                f"got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: unparseable value: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.asarray(rows, dtype=float), comment
