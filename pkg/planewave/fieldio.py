# fieldio.py
"""
Field files, diagnostics streams and CSV export.

PWFG layout (all little-endian):

    offset  type          content
    0       4 bytes       magic b"PWFG"
    4       u32           format version (1)
    8       u32           dimension d
    12      u32           kind: 0 scalar, 1 vector, 2 matrix
    16      d x u32       grid sizes n_1 ... n_d
    ...     f64 payload   row-major over the grid, components fastest

The payload holds prod(n)·d^kind doubles; matrix components are row-major.
"""
import json
import logging
import os
import struct
import tempfile

import numpy as np
import pandas as pd

from .errors import FieldFormatError, PreconditionError

logger = logging.getLogger(__name__)

MAGIC = b"PWFG"
VERSION = 1
KINDS = ("scalar", "vector", "matrix")


def _atomic_write(path, write):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def field_kind(values, d):
    """Infer the kind of a d-dimensional grid field from its trailing axes."""
    extra = values.ndim - d
    if extra not in (0, 1, 2) or any(s != d for s in values.shape[d:]):
        raise PreconditionError(f"array of shape {values.shape} is not a {d}-dimensional field")
    return KINDS[extra]


def write_field(path, values, d):
    """Write a scalar, vector or matrix field (float64) atomically."""
    values = np.asarray(values, dtype="<f8")
    kind = field_kind(values, d)
    if values.size == 0:
        raise PreconditionError("refusing to write an empty field")
    header = MAGIC + struct.pack("<III", VERSION, d, KINDS.index(kind))
    header += struct.pack(f"<{d}I", *values.shape[:d])
    payload = np.ascontiguousarray(values).tobytes(order="C")
    _atomic_write(path, lambda fh: (fh.write(header), fh.write(payload)))
    logger.debug("wrote %s field %s to %s", kind, values.shape, path)
    return path


def read_header(fh):
    magic = fh.read(4)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    raw = fh.read(12)
    if len(raw) != 12:
        raise FieldFormatError("truncated header")
    version, d, kind = struct.unpack("<III", raw)
    if version != VERSION:
        raise FieldFormatError(f"unsupported format version {version}")
    if d < 2 or d > 16 or kind > 2:
        raise FieldFormatError(f"invalid header fields d={d}, kind={kind}")
    raw = fh.read(4 * d)
    if len(raw) != 4 * d:
        raise FieldFormatError("truncated grid sizes")
    sizes = struct.unpack(f"<{d}I", raw)
    if any(s == 0 for s in sizes):
        raise FieldFormatError(f"empty field with sizes {sizes}")
    return d, KINDS[kind], tuple(sizes)


def read_field(path):
    """Return (values, kind) from a PWFG file."""
    with open(path, "rb") as fh:
        d, kind, sizes = read_header(fh)
        shape = sizes + (d,) * KINDS.index(kind)
        expected = int(np.prod(shape)) * 8
        payload = fh.read()
    if len(payload) != expected:
        raise FieldFormatError(f"payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)
    return values, kind


def append_jsonl(path, record):
    """Append one diagnostics record as a JSON line; the file is rewritten atomically."""
    line = (json.dumps(record, sort_keys=True) + "\n").encode("utf-8")
    existing = b""
    if os.path.exists(path):
        with open(path, "rb") as fh:
            existing = fh.read()
        if existing and not existing.endswith(b"\n"):
            existing += b"\n"
    _atomic_write(path, lambda fh: fh.write(existing + line))
    return path


def write_jsonl(path, records):
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _atomic_write(path, lambda fh: fh.write(text.encode("utf-8")))
    return path


def read_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def field_frame(values, kind, d):
    """
    One row per node: coordinates x1..xd, then components (v1..vd for
    vectors, U11, U12, ..., Udd row-major for matrices).
    """
    sizes = values.shape[:d]
    axes = [np.arange(n) * (2 * np.pi / n) for n in sizes]
    coords = np.meshgrid(*axes, indexing="ij")
    columns = {f"x{i + 1}": c.reshape(-1) for i, c in enumerate(coords)}
    n_nodes = int(np.prod(sizes))
    if kind == "scalar":
        columns["f"] = values.reshape(n_nodes)
    elif kind == "vector":
        flat = values.reshape(n_nodes, d)
        for i in range(d):
            columns[f"v{i + 1}"] = flat[:, i]
    else:
        flat = values.reshape(n_nodes, d, d)
        for i in range(d):
            for j in range(d):
                columns[f"U{i + 1}{j + 1}"] = flat[:, i, j]
    return pd.DataFrame(columns)


def export_csv(field_path, csv_path):
    """Grid field to CSV with 17 significant digits."""
    values, kind = read_field(field_path)
    d = values.ndim - KINDS.index(kind)
    frame = field_frame(values, kind, d)
    text = frame.to_csv(index=False, float_format="%.17g")
    _atomic_write(csv_path, lambda fh: fh.write(text.encode("utf-8")))
    return frame
