"""Matrix file formats: the binary KSMX container and plain CSV.

KSMX v1 layout (all little-endian)::

    bytes 0-3   magic b"KSMX"
    bytes 4-7   u32 version (= 1)
    bytes 8-15  u64 rows
    bytes 16-23 u64 cols
    then rows*cols IEEE-754 float64 values, row-major
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"KSMX"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class FormatError(ValueError):
    """A file does not follow the expected on-disk format."""


def write_ksmx(path, M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"KSMX stores 2-D matrices, got shape {M.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, M.shape[0], M.shape[1]))
        fh.write(np.ascontiguousarray(M).astype("<f8", copy=False).tobytes())


def read_ksmx(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated KSMX header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported KSMX version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    M = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        raise FormatError(f"{path}: matrix contains NaN or Inf")
    return M.astype(np.float64)


def write_csv(path, M):
    """Write a matrix as CSV using shortest round-trip decimals."""
    M = np.asarray(M, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in M:
            writer.writerow([repr(float(x)) for x in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: ragged or empty CSV matrix")
    return np.array(rows, dtype=np.float64)


def read_matrix(path):
    """Read a matrix, choosing the format from the file extension."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv(path)
    return read_ksmx(path)


def dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
