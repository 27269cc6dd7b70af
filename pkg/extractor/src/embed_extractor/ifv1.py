"""Minimal IFV1 vector container IO.

Layout: magic ``IFV1``, u32-le vector count, u32-le dimension, then per
vector a u16-le id length, the UTF-8 id bytes, and dim little-endian
float32 components. Files round-trip bit-exactly; any consumer that
speaks the container can read our output without sharing code.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ExtractorError

MAGIC = b"IFV1"
_HEADER = struct.Struct("<4sII")
_ID_LEN = struct.Struct("<H")


def write_vectors(path: str | Path,
                  items: Sequence[tuple[str, np.ndarray]]) -> None:
    """Write ``(id, values)`` pairs as one IFV1 file.

    All vectors must share one dimension and contain finite float32
    values; ids must be unique within the file.
    """
    items = list(items)
    dims = {np.asarray(values).size for _, values in items}
    if len(dims) > 1:
        raise ExtractorError(f"vectors have mixed dimensions {sorted(dims)}")
    dim = dims.pop() if dims else 0

    seen: set[str] = set()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, len(items), dim))
        for vector_id, values in items:
            if vector_id in seen:
                raise ExtractorError(f"duplicate vector id {vector_id!r}")
            seen.add(vector_id)
            arr = np.ascontiguousarray(values, dtype="<f4").ravel()
            if not np.all(np.isfinite(arr)):
                raise ExtractorError(f"non-finite values in vector {vector_id!r}")
            id_bytes = vector_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ExtractorError(f"vector id too long: {vector_id[:32]!r}...")
            fh.write(_ID_LEN.pack(len(id_bytes)))
            fh.write(id_bytes)
            fh.write(arr.tobytes())


def read_vectors(path: str | Path) -> list[tuple[str, np.ndarray]]:
    """Read an IFV1 file back into ``(id, float32 values)`` pairs."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ExtractorError(f"{path}: truncated header")
        magic, count, dim = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ExtractorError(f"{path}: bad magic {magic!r}")
        items: list[tuple[str, np.ndarray]] = []
        for i in range(count):
            raw_len = fh.read(_ID_LEN.size)
            if len(raw_len) != _ID_LEN.size:
                raise ExtractorError(f"{path}: truncated at vector {i}")
            (id_len,) = _ID_LEN.unpack(raw_len)
            vector_id = fh.read(id_len).decode("utf-8")
            buf = fh.read(4 * dim)
            if len(buf) != 4 * dim:
                raise ExtractorError(f"{path}: truncated values for {vector_id!r}")
            items.append((vector_id, np.frombuffer(buf, dtype="<f4").copy()))
        if fh.read(1):
            raise ExtractorError(f"{path}: trailing bytes after {count} vectors")
    return items
