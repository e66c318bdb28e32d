"""Serialization of far fields, far-field matrices, indicator grids and count fields.

Floats are written in their shortest round-trip decimal form, so a reread
value is bit-identical and reruns produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .forward import FarFieldPattern
from .indicators import IndicatorGrid, is_sentinel
from .scatterers import FarFieldMatrix


def fmt(x) -> str:
    return repr(float(x))


def _write_rows(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    return rows[0], rows[1:]


def _dump_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    return path


# ----------------------------------------------------------------- far-field patterns

def farfield_to_dict(U: FarFieldPattern) -> dict:
    return {"k": float(U.k), "angles": [float(a) for a in U.angles],
            "re": [float(v) for v in U.values.real], "im": [float(v) for v in U.values.imag],
            "weights": [float(w) for w in U.weights], "meta": U.meta}


def farfield_from_dict(d: dict) -> FarFieldPattern:
    vals = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    return FarFieldPattern(np.asarray(d["angles"], dtype=float), vals, float(d["k"]),
                           np.asarray(d["weights"], dtype=float), dict(d.get("meta", {})))


def write_farfield_json(U: FarFieldPattern, path) -> Path:
    return _dump_json(farfield_to_dict(U), path)


def read_farfield_json(path) -> FarFieldPattern:
    return farfield_from_dict(json.loads(Path(path).read_text()))


def write_farfield_csv(U: FarFieldPattern, path) -> Path:
    """Columns ``angle_rad, re, im``; wave number and weights live in the JSON mirror."""
    rows = [(fmt(a), fmt(v.real), fmt(v.imag)) for a, v in zip(U.angles, U.values)]
    return _write_rows(path, ("angle_rad", "re", "im"), rows)


def read_farfield_csv(path, k: float, weights=None, meta=None) -> FarFieldPattern:
    header, rows = _read_rows(path)
    if header != ["angle_rad", "re", "im"]:
        raise ValueError(f"{path}: expected columns angle_rad,re,im, got {header}")
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return FarFieldPattern(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], k, weights, dict(meta or {}))


def write_farfield(U: FarFieldPattern, stem) -> tuple[Path, Path]:
    """CSV and JSON mirror at ``stem.csv`` / ``stem.json``."""
    stem = Path(stem)
    return (write_farfield_csv(U, stem.with_suffix(".csv")),
            write_farfield_json(U, stem.with_suffix(".json")))


# ----------------------------------------------------------------- far-field matrices

def farfield_matrix_to_dict(F: FarFieldMatrix) -> dict:
    return {"k": float(F.k), "angles": [float(a) for a in F.angles],
            "weights": [float(w) for w in F.weights], "aperture": list(F.aperture),
            "re": F.entries.real.tolist(), "im": F.entries.imag.tolist(), "meta": F.meta}


def farfield_matrix_from_dict(d: dict) -> FarFieldMatrix:
    entries = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    return FarFieldMatrix(entries, np.asarray(d["angles"], dtype=float), float(d["k"]),
                          np.asarray(d["weights"], dtype=float), tuple(d.get("aperture", (0.0, 2 * np.pi))),
                          dict(d.get("meta", {})))


def write_farfield_matrix_json(F: FarFieldMatrix, path) -> Path:
    return _dump_json(farfield_matrix_to_dict(F), path)


def read_farfield_matrix_json(path) -> FarFieldMatrix:
    return farfield_matrix_from_dict(json.loads(Path(path).read_text()))


def write_farfield_matrix_csv(F: FarFieldMatrix, path) -> Path:
    """Long format: one row ``obs_angle, inc_angle, re, im`` per entry."""
    rows = [(fmt(F.angles[i]), fmt(F.angles[j]), fmt(F.entries[i, j].real), fmt(F.entries[i, j].imag))
            for i in range(F.size) for j in range(F.size)]
    return _write_rows(path, ("obs_angle", "inc_angle", "re", "im"), rows)


def read_farfield_matrix_csv(path, k: float, weights=None, aperture=(0.0, 2 * np.pi)) -> FarFieldMatrix:
    header, rows = _read_rows(path)
    if header != ["obs_angle", "inc_angle", "re", "im"]:
        raise ValueError(f"{path}: expected columns obs_angle,inc_angle,re,im, got {header}")
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    angles = np.unique(arr[:, 0])
    m = len(angles)
    if len(arr) != m * m or not np.array_equal(np.unique(arr[:, 1]), angles):
        raise ValueError(f"{path}: entries do not form a square grid on one direction set")
    i = np.searchsorted(angles, arr[:, 0])
    j = np.searchsorted(angles, arr[:, 1])
    entries = np.full((m, m), np.nan, dtype=complex)
    entries[i, j] = arr[:, 2] + 1j * arr[:, 3]
    return FarFieldMatrix(entries, angles, k, weights, aperture)


def read_farfield_matrix(path, k: float | None = None) -> FarFieldMatrix:
    path = Path(path)
    if path.suffix == ".json":
        return read_farfield_matrix_json(path)
    if k is None:
        raise ValueError("reading a far-field matrix from CSV needs the wave number")
    return read_farfield_matrix_csv(path, k)


# ----------------------------------------------------------------- indicator grids

def indicator_to_dict(grid: IndicatorGrid) -> dict:
    return {"columns": list(grid.columns), "samples": grid.samples.tolist(),
            "values": [float(v) for v in grid.values],
            "sentinel": [bool(s) for s in grid.sentinel], "meta": grid.meta}


def indicator_from_dict(d: dict) -> IndicatorGrid:
    cols = tuple(d["columns"])
    samples = np.asarray(d["samples"], dtype=float).reshape(-1, len(cols))
    return IndicatorGrid(cols, samples, np.asarray(d["values"], dtype=float), dict(d.get("meta", {})))


def write_indicator_json(grid: IndicatorGrid, path) -> Path:
    return _dump_json(indicator_to_dict(grid), path)


def read_indicator_json(path) -> IndicatorGrid:
    return indicator_from_dict(json.loads(Path(path).read_text()))


def write_indicator_csv(grid: IndicatorGrid, path, extra: dict | None = None) -> Path:
    """Descriptor columns, ``value``, a 0/1 ``sentinel`` flag, then optional extra columns."""
    extra = extra or {}
    header = (*grid.columns, "value", "sentinel", *extra)
    flags = is_sentinel(grid.values)
    rows = []
    for i, (row, v, s) in enumerate(zip(grid.samples, grid.values, flags)):
        rows.append((*map(fmt, row), fmt(v), "1" if s else "0", *(_cell(col[i]) for col in extra.values())))
    return _write_rows(path, header, rows)


def read_indicator_csv(path, meta=None) -> IndicatorGrid:
    header, rows = _read_rows(path)
    if "value" not in header or "sentinel" not in header:
        raise ValueError(f"{path}: indicator CSV needs value and sentinel columns")
    vi = header.index("value")
    arr = np.array([[float(x) for x in r[:vi + 1]] for r in rows]).reshape(-1, vi + 1)
    return IndicatorGrid(tuple(header[:vi]), arr[:, :vi], arr[:, vi], dict(meta or {}))


def write_indicator(grid: IndicatorGrid, stem, extra: dict | None = None) -> tuple[Path, Path]:
    stem = Path(stem)
    return (write_indicator_csv(grid, stem.with_suffix(".csv"), extra),
            write_indicator_json(grid, stem.with_suffix(".json")))


# ----------------------------------------------------------------- count fields

def write_count_field_csv(xs, ys, counts, path) -> Path:
    """Rows ``x, y, count`` of an integer field on the grid ``ys x xs``."""
    counts = np.asarray(counts)
    rows = [(fmt(x), fmt(y), str(int(counts[i, j])))
            for i, y in enumerate(ys) for j, x in enumerate(xs)]
    return _write_rows(path, ("x", "y", "count"), rows)


def read_count_field_csv(path):
    header, rows = _read_rows(path)
    if header != ["x", "y", "count"]:
        raise ValueError(f"{path}: expected columns x,y,count, got {header}")
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    xs = np.unique(arr[:, 0])
    ys = np.unique(arr[:, 1])
    counts = np.zeros((len(ys), len(xs)), dtype=np.int64)
    counts[np.searchsorted(ys, arr[:, 1]), np.searchsorted(xs, arr[:, 0])] = arr[:, 2].astype(np.int64)
    return xs, ys, counts


def write_table_csv(header, columns, path) -> Path:
    """Plain numeric table from equally long columns."""
    cols = [np.asarray(c) for c in columns]
    rows = [tuple(_cell(c[i]) for c in cols) for i in range(len(cols[0]))]
    return _write_rows(path, tuple(header), rows)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(v)


def write_json(obj, path) -> Path:
    return _dump_json(obj, path)


__all__ = [
    "fmt", "farfield_to_dict", "farfield_from_dict", "write_farfield_json", "read_farfield_json",
    "write_farfield_csv", "read_farfield_csv", "write_farfield", "farfield_matrix_to_dict",
    "farfield_matrix_from_dict", "write_farfield_matrix_json", "read_farfield_matrix_json",
    "write_farfield_matrix_csv", "read_farfield_matrix_csv", "read_farfield_matrix",
    "indicator_to_dict", "indicator_from_dict", "write_indicator_json", "read_indicator_json",
    "write_indicator_csv", "read_indicator_csv", "write_indicator", "write_count_field_csv",
    "read_count_field_csv", "write_table_csv", "write_json",
]
