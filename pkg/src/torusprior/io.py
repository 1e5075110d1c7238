"""File formats: IPT1 binary tensors, CSV exports, JSON metadata sidecars.

Binary layout: magic "IPT1" | ndim (u64 LE) | dims (u64 LE each) | payload.
Payload is row-major float64; complex tensors store interleaved (re, im)
pairs and are recognized on read by payload size.  All writers are
deterministic (no timestamps), so reruns with identical inputs are
byte-identical.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"IPT1"


def write_tensor(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    if array.size == 0:
        raise ValueError("refusing to write empty tensor")
    complex_kind = np.iscomplexobj(array)
    payload = (array.astype(np.complex128) if complex_kind
               else array.astype(np.float64))
    if complex_kind:
        flat = np.empty(payload.size * 2, dtype="<f8")
        flat[0::2] = payload.real.ravel()
        flat[1::2] = payload.imag.ravel()
    else:
        flat = payload.ravel().astype("<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", array.ndim))
        for d in array.shape:
            fh.write(struct.pack("<Q", d))
        fh.write(flat.tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        (ndim,) = struct.unpack("<Q", fh.read(8))
        if ndim > 8:
            raise ValueError(f"{path}: implausible ndim {ndim}")
        dims = [struct.unpack("<Q", fh.read(8))[0] for _ in range(ndim)]
        raw = fh.read()
    n = int(np.prod(dims)) if dims else 1
    count = len(raw) // 8
    if count == n:
        return np.frombuffer(raw, dtype="<f8", count=n).reshape(dims).copy()
    if count == 2 * n:
        flat = np.frombuffer(raw, dtype="<f8", count=2 * n)
        return (flat[0::2] + 1j * flat[1::2]).reshape(dims).copy()
    raise ValueError(f"{path}: payload size {count} doubles, expected {n} or {2*n}")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_field_csv(path, grid, columns: dict) -> None:
    """One row per node with its coordinates plus the named value columns."""
    coords = grid.node_coords()
    names = ["x"] if grid.dim == 1 else ["x", "y"]
    header = names + list(columns.keys())
    cols = [np.asarray(c, dtype=np.float64) for c in columns.values()]
    for c in cols:
        if c.shape != (grid.n_nodes,):
            raise ValueError("column length must equal node count")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(grid.n_nodes):
            row = [_fmt(coords[i, ax]) for ax in range(grid.dim)]
            row += [_fmt(c[i]) for c in cols]
            fh.write(",".join(row) + "\n")


def write_table_csv(path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def write_metadata(path, meta: dict) -> None:
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metadata(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
