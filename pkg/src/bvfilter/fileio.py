"""Delimited, JSON and binary output with atomic writes.

Every CSV starts with the comment line `# schema=v1` followed by a header
row; floats are written with enough digits to round-trip.  Density
snapshots use a small self-describing binary layout: magic, version, the
grid (per-axis bounds and node counts), the timestamp, then the values as
row-major float64.  All writers go through a temp file in the target
directory and an atomic rename.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import GridMismatchError
from .fields import DensityField
from .grids import SpatialGrid
from .results import EstimateSeries

SCHEMA_LINE = "# schema=v1"
_MAGIC = b"BVFD"


def _atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, columns: dict) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    nrows = len(arrays[0])
    if any(len(a) != nrows for a in arrays):
        raise ValueError("all columns must have equal length")
    lines = [SCHEMA_LINE, ",".join(names)]
    for r in range(nrows):
        lines.append(",".join(np.format_float_scientific(a[r], precision=17) for a in arrays))
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def read_csv(path) -> dict:
    path = Path(path)
    with path.open() as f:
        first = f.readline().strip()
        if first != SCHEMA_LINE:
            raise ValueError(f"{path}: missing or wrong schema line (got {first!r})")
        names = f.readline().strip().split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    if data.size == 0:
        return {k: np.zeros(0) for k in names}
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns, header names {len(names)}")
    return {k: data[:, i] for i, k in enumerate(names)}


def write_json(path, obj) -> None:
    _atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def write_estimate_csv(path, series: EstimateSeries) -> None:
    write_csv(path, series.columns())


def write_density_bin(path, field: DensityField) -> None:
    grid = field.grid
    head = [_MAGIC, struct.pack("<II", 1, grid.ndim)]
    for lo, hi, n in zip(grid.lo, grid.hi, grid.counts):
        head.append(struct.pack("<ddQ", lo, hi, n))
    head.append(struct.pack("<d", field.t))
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    _atomic_write_bytes(path, b"".join(head) + payload)


def read_density_bin(path) -> DensityField:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a density snapshot file")
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != 1:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    off = 12
    lo, hi, counts = [], [], []
    for _ in range(ndim):
        l, h, n = struct.unpack_from("<ddQ", raw, off)
        lo.append(l)
        hi.append(h)
        counts.append(int(n))
        off += 24
    (t,) = struct.unpack_from("<d", raw, off)
    off += 8
    grid = SpatialGrid(tuple(lo), tuple(hi), tuple(counts))
    values = np.frombuffer(raw, dtype="<f8", offset=off).reshape(grid.shape).copy()
    return DensityField(grid, values, t)


# ---------------------------------------------------------------------------
# cross-method comparison of estimate tables


def compare_estimates(a: dict, b: dict) -> dict:
    """Difference metrics between two estimate tables (from read_csv).

    Requires matching time columns and matching mean/cov column sets;
    raises GridMismatchError otherwise.  Returns the joint RMSE over the
    mean columns, the sup-norm error over covariance columns, and the
    sup-norm discrepancy of the log-mass column.
    """
    ta, tb = np.asarray(a["t"]), np.asarray(b["t"])
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=1e-10, atol=1e-12):
        raise GridMismatchError("estimate tables are on different time grids")
    mean_cols = sorted(k for k in a if k.startswith("mean_"))
    if mean_cols != sorted(k for k in b if k.startswith("mean_")):
        raise GridMismatchError("estimate tables have different mean columns")
    cov_cols = sorted(k for k in a if k.startswith("cov_"))
    if cov_cols != sorted(k for k in b if k.startswith("cov_")):
        raise GridMismatchError("estimate tables have different covariance columns")
    dmean = np.stack([a[k] - b[k] for k in mean_cols])
    dcov = np.stack([a[k] - b[k] for k in cov_cols])
    return {
        "nodes": int(len(ta)),
        "mean_rmse": float(np.sqrt(np.mean(dmean**2))),
        "cov_sup": float(np.max(np.abs(dcov))),
        "log_mass_sup": float(np.max(np.abs(a["log_mass"] - b["log_mass"]))),
    }
