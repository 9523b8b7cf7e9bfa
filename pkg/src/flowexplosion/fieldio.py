"""Scalar-field export: CSV rows (x, y, value) and a binary checkpoint dump.

The dump is a fixed little-endian header (magic, nx, ny, hx, hy, x0, y0)
followed by the node values in row-major order as float64.  The mask is
not stored; reloading pairs the values with a grid built from the same
domain description.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .grid import Grid2D

MAGIC = b"FXSF0001"
_HEADER = struct.Struct("<8sqqdddd")


def write_field_csv(path, grid: Grid2D, values: np.ndarray, interior_only: bool = False):
    values = np.asarray(values, float)
    X, Y = grid.mesh()
    sel = grid.interior_mask if interior_only else np.ones(grid.shape, bool)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for x, y, v in zip(X[sel], Y[sel], values[sel]):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


def read_field_csv(path, grid: Grid2D) -> np.ndarray:
    """Values placed back on ``grid`` by nearest node; missing nodes are 0."""
    out = np.zeros(grid.shape)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            i = int(round((float(row["x"]) - grid.origin[0]) / grid.hx))
            j = int(round((float(row["y"]) - grid.origin[1]) / grid.hy))
            out[i, j] = float(row["value"])
    return out


def dump_field(path, grid: Grid2D, values: np.ndarray):
    values = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.nx, grid.ny, grid.hx, grid.hy, *map(float, grid.origin)))
        fh.write(values.tobytes(order="C"))


def load_field(path):
    """Return (header dict, values) from a binary dump."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, nx, ny, hx, hy, x0, y0 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a field dump")
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if vals.size != (nx + 1) * (ny + 1):
        raise ValueError(f"{path}: truncated dump")
    return {"nx": nx, "ny": ny, "hx": hx, "hy": hy, "origin": (x0, y0)}, vals.reshape(nx + 1, ny + 1).copy()
