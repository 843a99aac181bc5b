"""Series files and report files.

Two series formats round-trip exactly:

* CSV: one numeric column, optional single header line, ``%.17g`` on output.
* binary: the 8-byte magic ``W2CSER\\x00\\x01`` followed by little-endian float64 samples.

Missing or non-finite samples are rejected, never imputed.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .procgen import TimeSeries

MAGIC = b"W2CSER\x00\x01"


class SeriesFormatError(ValueError):
    """A series file is malformed or contains missing values."""


def detect_format(path: str | Path) -> str:
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return "bin" if head == MAGIC else "csv"


def write_series(path: str | Path, values, fmt: str | None = None, header: str | None = None) -> None:
    values = np.asarray(getattr(values, "values", values), dtype=float)
    if values.ndim != 1:
        raise ValueError("series must be one-dimensional")
    fmt = fmt or ("bin" if str(path).endswith((".bin", ".w2c")) else "csv")
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(values.astype("<f8").tobytes())
    elif fmt == "csv":
        lines = [] if header is None else [header]
        lines.extend(f"{v:.17g}" for v in values)
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown series format {fmt!r}")


def read_series(path: str | Path) -> TimeSeries:
    """Load a CSV or binary series; the format is detected from the magic header."""
    path = Path(path)
    if detect_format(path) == "bin":
        raw = path.read_bytes()[len(MAGIC):]
        if len(raw) % 8:
            raise SeriesFormatError(f"{path}: binary payload is not a whole number of float64 values")
        values = np.frombuffer(raw, dtype="<f8").astype(float)
    else:
        values = _parse_csv(path)
    if values.size == 0:
        raise SeriesFormatError(f"{path}: no samples")
    bad = ~np.isfinite(values)
    if bad.any():
        raise SeriesFormatError(f"{path}: non-finite sample at index {int(np.argmax(bad))}")
    return TimeSeries(values, meta={"source": str(path)})


def _parse_csv(path: Path) -> np.ndarray:
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        field = line.strip()
        if not field:
            continue
        if "," in field:
            raise SeriesFormatError(f"{path}:{lineno}: expected a single column")
        try:
            value = float(field)
        except ValueError:
            if lineno == 1 and not out:
                continue  # header
            raise SeriesFormatError(f"{path}:{lineno}: missing or non-numeric value {field!r}") from None
        if math.isnan(value):
            raise SeriesFormatError(f"{path}:{lineno}: missing value")
        out.append(value)
    return np.asarray(out, dtype=float)


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
