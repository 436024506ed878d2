"""Flat binary checkpoint container.

Layout (little-endian)::

    magic      8 bytes  b"SAGCNCKP"
    version    u32
    meta_len   u32, then meta_len bytes of UTF-8 JSON (sorted keys)
    n_records  u32
    per record:
        name_len u16, name bytes
        ndim     u8, then ndim x u64 shape
        values   prod(shape) x f64, row-major
    crc32      u32 over everything above

Values round-trip bit-exactly.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"SAGCNCKP"
VERSION = 1


class CheckpointError(Exception):
    """Unreadable or corrupted checkpoint."""


class CheckpointVersionError(CheckpointError):
    pass


def dumps(records: dict[str, np.ndarray], metadata: dict | None = None) -> bytes:
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(meta)), meta, struct.pack("<I", len(records))]
    for name, value in records.items():
        arr = np.ascontiguousarray(value, dtype="<f8")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<HB", len(encoded), arr.ndim))
        parts.append(encoded)
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def loads(blob: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if len(blob) < len(MAGIC) + 16 or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    (version,) = struct.unpack_from("<I", body, len(MAGIC))
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint version {version}, expected {VERSION}")
    if zlib.crc32(body) != crc:
        raise CheckpointError("checksum mismatch (corrupted checkpoint)")
    try:
        return _parse_body(body)
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc


def _parse_body(body: bytes) -> tuple[dict[str, np.ndarray], dict]:
    pos = len(MAGIC) + 4
    (meta_len,) = struct.unpack_from("<I", body, pos)
    pos += 4
    metadata = json.loads(body[pos : pos + meta_len].decode("utf-8"))
    pos += meta_len
    (count,) = struct.unpack_from("<I", body, pos)
    pos += 4
    records: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_len, ndim = struct.unpack_from("<HB", body, pos)
        pos += 3
        name = body[pos : pos + name_len].decode("utf-8")
        pos += name_len
        shape = struct.unpack_from(f"<{ndim}Q", body, pos)
        pos += 8 * ndim
        size = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(body, dtype="<f8", count=size, offset=pos)
        pos += 8 * size
        records[name] = values.reshape(shape).astype(np.float64)
    if pos != len(body):
        raise ValueError(f"{len(body) - pos} trailing bytes")
    return records, metadata


def save(path, records: dict[str, np.ndarray], metadata: dict | None = None) -> None:
    Path(path).write_bytes(dumps(records, metadata))


def load(path) -> tuple[dict[str, np.ndarray], dict]:
    return loads(Path(path).read_bytes())
