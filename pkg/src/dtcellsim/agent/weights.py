"""Flat binary container for named float32 arrays.

Layout (little-endian throughout):
    magic   8 bytes  b"DTCWGT\\x00\\x01"  (format version in the last byte)
    count   uint32   number of entries
  then per entry:
    name_len uint16, name utf-8 bytes
    ndim     uint8,  dims ndim * int64
    data     float32 row-major

Save then load reproduces every byte, which checkpoint replay relies on.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

MAGIC = b"DTCWGT\x00\x01"


def pack_weights(arrays: dict[str, np.ndarray]) -> bytes:
    out = [MAGIC, struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        encoded = name.encode("utf-8")
        out.append(struct.pack("<H", len(encoded)))
        out.append(encoded)
        out.append(struct.pack("<B", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}q", *arr.shape))
        out.append(arr.tobytes())
    return b"".join(out)


def unpack_weights(blob: bytes) -> dict[str, np.ndarray]:
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC) - 1] != MAGIC[:-1]:
        raise CheckpointError("not a weights container")
    if blob[len(MAGIC) - 1] != MAGIC[-1]:
        raise CheckpointError(
            f"unsupported weights format version {blob[len(MAGIC) - 1]}")
    pos = len(MAGIC)

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError("weights container is truncated")
        chunk = blob[pos: pos + n]
        pos += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}q", take(8 * ndim)) if ndim else ()
        n_items = int(np.prod(shape)) if shape else 1
        data = take(4 * n_items)
        arrays[name] = np.frombuffer(data, dtype="<f4").reshape(shape).copy()
    if pos != len(blob):
        raise CheckpointError("trailing bytes after the last weights entry")
    return arrays


def save_weights(path, arrays: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(pack_weights(arrays))


def load_weights(path) -> dict[str, np.ndarray]:
    return unpack_weights(Path(path).read_bytes())
