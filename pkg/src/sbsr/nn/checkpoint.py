"""Binary checkpoint container: named float32 tensors, bit-exact round-trip.

Layout (all integers little-endian):

    magic "SBSR" | version u16 | tensor count u32
    per tensor: name length u16 | name UTF-8 | ndim u8 | dims u32... | raw f32 LE
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SBSR"
VERSION = 1


class CheckpointError(RuntimeError):
    """Malformed or unreadable checkpoint file."""


def save_checkpoint(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Write named tensors; arrays must be float32 (the on-disk precision)."""
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<HI", VERSION, len(tensors))
    for name, arr in tensors.items():
        if arr.dtype != np.float32:
            raise CheckpointError(f"tensor {name!r} must be float32, got {arr.dtype}")
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    """Read a checkpoint back into {name: float32 array}."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:4]!r}")
    version, count = struct.unpack_from("<HI", data, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    offset = 10
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        dims = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        n = int(np.prod(dims)) if ndim else 1
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(dims)
        offset += 4 * n
        tensors[name] = arr.astype(np.float32)  # own, writable copy
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return tensors
