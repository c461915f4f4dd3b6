"""Binary matrix snapshots and CSV import.

Snapshot layout, all little endian: magic ``KLRM``, u32 version, u64 rows,
u64 cols, then rows*cols float64 payload in row-major order.
"""

from __future__ import annotations

import struct

import numpy as np

from .linops import ConfigError, DenseMatrix, ShapeMismatchError

MAGIC = b"KLRM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

CSV_MAX_ENTRIES = 10 ** 6


def write_matrix(path, A) -> None:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeMismatchError(f"can only snapshot 2-d matrices, got shape {A.shape}")
    payload = np.ascontiguousarray(A, dtype="<f8")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, A.shape[0], A.shape[1]))
        f.write(payload.tobytes(order="C"))


def read_matrix(path) -> DenseMatrix:
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ConfigError(f"{path}: truncated header")
        magic, version, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ConfigError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise ConfigError(f"{path}: unsupported format version {version}")
        payload = f.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise ConfigError(
            f"{path}: payload holds {len(payload)} bytes, header promises {rows * cols * 8}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)


def read_csv_matrix(path) -> DenseMatrix:
    """Comma-separated numeric rows, capped at 1e6 entries."""
    A = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if A.size > CSV_MAX_ENTRIES:
        raise ConfigError(
            f"{path}: {A.size} entries exceeds the CSV import cap of {CSV_MAX_ENTRIES}")
    return A
