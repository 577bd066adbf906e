"""Binary parameter checkpoints.

Layout (all integers little-endian)::

    8 bytes   magic  b"RSSICKPT"
    u32       format version (1)
    u32       length of the metadata blob, then that many bytes of UTF-8 JSON
              (sorted keys, no whitespace)
    u32       number of parameters
    per parameter:
      u16     name length, then the UTF-8 name
      u8      ndim, then ndim x u32 dimensions
      f64[]   values, row-major, little-endian

Values are copied byte-for-byte, so save -> load is bitwise exact.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"RSSICKPT"
VERSION = 1


def dumps(params: list[tuple[str, np.ndarray]], meta: dict | None = None) -> bytes:
    blob = json.dumps(meta or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(blob)), blob, struct.pack("<I", len(params))]
    for name, arr in params:
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


def loads(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if data[:8] != MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    version, meta_len = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    pos = 16
    meta = json.loads(data[pos:pos + meta_len].decode("utf-8"))
    pos += meta_len
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + n].decode("utf-8")
        pos += n
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        size = int(np.prod(shape, dtype=np.int64))
        params[name] = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * size
    if pos != len(data):
        raise ValueError(f"trailing bytes in checkpoint ({len(data) - pos})")
    return meta, params


def save_checkpoint(path: str | Path, params: list[tuple[str, np.ndarray]], meta: dict | None = None) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(dumps(params, meta))


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    return loads(Path(path).read_bytes())
