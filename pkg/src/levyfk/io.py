"""Artifact writers: CSV, JSON records and binary slabs, all written atomically.

A binary slab is ``b"LFK1"``, a little-endian ``u32`` version, ``u64`` rows,
``u64`` cols, then ``rows * cols`` little-endian ``f64`` values in row-major
order. CSV and slab artifacts get a ``<path>.meta.json`` sidecar holding the
resolved configuration and its hash; JSON records embed both directly.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = [
    "SLAB_MAGIC",
    "SLAB_VERSION",
    "atomic_write",
    "format_value",
    "csv_text",
    "write_csv",
    "read_csv",
    "write_json",
    "write_slab",
    "read_slab",
    "sidecar_path",
    "write_sidecar",
    "read_sidecar",
]

SLAB_MAGIC = b"LFK1"
SLAB_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def atomic_write(path: str | Path, data: bytes | str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_value(x) -> str:
    """Round-trip text for CSV cells; floats use ``repr`` so output is reproducible."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path} is empty") from None
        return header, [row for row in reader]


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def json_text(record) -> str:
    return json.dumps(record, sort_keys=True, indent=2, default=_json_default) + "\n"


def write_json(path, record) -> Path:
    return atomic_write(path, json_text(record))


def write_slab(path, array) -> Path:
    a = np.ascontiguousarray(np.atleast_2d(np.asarray(array, dtype="<f8")))
    if a.ndim != 2:
        raise ValueError("slab must be 2-dimensional")
    rows, cols = a.shape
    return atomic_write(path, _HEADER.pack(SLAB_MAGIC, SLAB_VERSION, rows, cols) + a.tobytes(order="C"))


def read_slab(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated slab header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != SLAB_MAGIC:
        raise ValueError("not an LFK1 slab")
    if version != SLAB_VERSION:
        raise ValueError(f"unsupported slab version {version}")
    body = data[_HEADER.size :]
    if len(body) != 8 * rows * cols:
        raise ValueError("slab payload size does not match its header")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).copy()


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_sidecar(path, meta: dict) -> Path:
    return write_json(sidecar_path(path), meta)


def read_sidecar(path) -> dict | None:
    side = sidecar_path(path)
    if not side.exists():
        return None
    return json.loads(side.read_text())
