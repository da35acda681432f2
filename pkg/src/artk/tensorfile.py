"""``ARTK`` binary tensor files.

Layout (all little-endian)::

    magic   4 bytes  b"ARTK"
    version u32      1
    dtype   u8       0 = float32
    ndim    u8
    dims    ndim x u64
    payload prod(dims) x float32, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from artk.errors import InputError

MAGIC = b"ARTK"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sIBB")


def to_bytes(arr) -> bytes:
    a = np.ascontiguousarray(arr, dtype="<f4")
    if a.ndim > 255:
        raise InputError("too many dimensions")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, a.ndim)
    dims = struct.pack(f"<{a.ndim}Q", *a.shape)
    return header + dims + a.tobytes()


def from_bytes(buf: bytes) -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise InputError("truncated tensor header")
    magic, version, dtype, ndim = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise InputError(f"bad magic {magic!r}")
    if version != VERSION:
        raise InputError(f"unsupported tensor file version {version}")
    if dtype != DTYPE_F32:
        raise InputError(f"unsupported dtype code {dtype}")
    off = _HEADER.size
    if len(buf) < off + 8 * ndim:
        raise InputError("truncated dims")
    dims = struct.unpack_from(f"<{ndim}Q", buf, off)
    off += 8 * ndim
    count = 1
    for dim in dims:
        count *= dim
    if len(buf) - off != 4 * count:
        raise InputError(f"payload is {len(buf) - off} bytes, expected {4 * count}")
    return np.frombuffer(buf, dtype="<f4", count=count, offset=off).astype(np.float32).reshape(dims)


def save_tensor(path: str | Path, arr) -> None:
    Path(path).write_bytes(to_bytes(arr))


def load_tensor(path: str | Path) -> np.ndarray:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read tensor file {path}: {exc}") from exc
    try:
        return from_bytes(buf)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc
