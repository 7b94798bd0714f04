"""Versioned flat checkpoint files.

Layout: 8-byte magic, uint32 LE version, uint64 LE manifest length, a JSON
manifest listing (name, shape) in serialization order, then the raw
little-endian float64 arrays concatenated in manifest order.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

MAGIC = b"UVAACKPT"
CHECKPOINT_VERSION = 1


def save_arrays_bytes(arrays: dict[str, np.ndarray]) -> bytes:
    manifest = [
        {"name": name, "shape": list(np.asarray(arr).shape)} for name, arr in arrays.items()
    ]
    manifest_blob = json.dumps(manifest, separators=(",", ":")).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<I", CHECKPOINT_VERSION),
        struct.pack("<Q", len(manifest_blob)),
        manifest_blob,
    ]
    for _, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f8")
        parts.append(data.tobytes())
    return b"".join(parts)


def load_arrays_bytes(blob: bytes) -> dict[str, np.ndarray]:
    if len(blob) < 20 or blob[:8] != MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    (version,) = struct.unpack("<I", blob[8:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (manifest_len,) = struct.unpack("<Q", blob[12:20])
    manifest_end = 20 + manifest_len
    if len(blob) < manifest_end:
        raise CheckpointError("truncated manifest")
    try:
        manifest = json.loads(blob[20:manifest_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable manifest: {exc}") from exc
    arrays: dict[str, np.ndarray] = {}
    offset = manifest_end
    for entry in manifest:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(blob) < offset + nbytes:
            raise CheckpointError(f"truncated data for '{entry['name']}'")
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        arrays[entry["name"]] = arr.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError("trailing bytes after declared arrays")
    return arrays


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(save_arrays_bytes(arrays))


def load_arrays(path: str | Path) -> dict[str, np.ndarray]:
    return load_arrays_bytes(Path(path).read_bytes())


def content_id(arrays: dict[str, np.ndarray]) -> str:
    """Content-addressed snapshot id: SHA-256 of the serialized bytes."""
    return hashlib.sha256(save_arrays_bytes(arrays)).hexdigest()[:16]
