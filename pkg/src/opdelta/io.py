"""CSV ingestion of gridded curves and deterministic JSON output."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import basis
from .fcca import FunctionalSample
from .operators import BlockStructure


class DataError(ValueError):
    """Malformed input data; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class GriddedDataset:
    grid: np.ndarray
    rows: np.ndarray
    split_point: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise DataError("grid must be strictly increasing", line=1)
        if not grid[0] < self.split_point < grid[-1]:
            raise SplitError(f"split point {self.split_point} is not strictly inside ({grid[0]}, {grid[-1]})")
        if np.sum(grid <= self.split_point) < 2 or np.sum(grid >= self.split_point) < 2:
            raise SplitError(f"split point {self.split_point} leaves fewer than 2 grid points on one side")


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Header row = grid values, each further row = one curve."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file", line=1) from None
        try:
            grid = np.array([float(x) for x in header])
        except ValueError as exc:
            raise DataError(f"non-numeric grid value ({exc})", line=1) from None
        if grid.size < 3:
            raise DataError("grid needs at least 3 points", line=1)
        if np.any(np.diff(grid) <= 0):
            raise DataError("grid must be strictly increasing", line=1)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != grid.size:
                raise DataError(f"expected {grid.size} values, got {len(row)}", line=line_no)
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise DataError(f"non-numeric value ({exc})", line=line_no) from None
    if not rows:
        raise DataError("no observations after the header row", line=2)
    return grid, np.array(rows)


def write_csv(path, grid, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([format_float(x) for x in grid])
        for r in np.atleast_2d(rows):
            w.writerow([format_float(x) for x in r])


def ingest(csv_path, split_point: float, basis_size: int) -> tuple[FunctionalSample, BlockStructure]:
    """Read curves and project them onto the split-adapted sine basis."""
    grid, rows = read_csv(csv_path)
    ds = GriddedDataset(grid, rows, float(split_point))
    coeffs = basis.project(ds.grid, ds.rows, ds.split_point, basis_size)
    m1, _ = basis.split_sizes(basis_size)
    return FunctionalSample(coeffs), BlockStructure(basis_size, m1)


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x}")
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float, np.number)) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        return "[" + ",".join(pad + _encode(x, indent, level + 1) for x in obj) + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (pad + json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items())
        return "{" + ",".join(items) + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"
