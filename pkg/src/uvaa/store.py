"""Content-addressed snapshot stores.

Snapshots are named array bundles serialized in the checkpoint format and
keyed by the SHA-256 of their bytes, so identical parameters always map to
the same id.  The disk store bounds memory during long runs and is safe
for concurrent same-content writes (atomic rename).
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .neural.checkpoint import (
    content_id,
    load_arrays_bytes,
    save_arrays_bytes,
)


class MemoryStore:
    """Keeps serialized snapshots in RAM; suitable for tests and small runs."""

    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}

    def save(self, arrays: dict[str, np.ndarray]) -> str:
        blob = save_arrays_bytes(arrays)
        snapshot_id = content_id(arrays)
        self._blobs.setdefault(snapshot_id, blob)
        return snapshot_id

    def load(self, snapshot_id: str) -> dict[str, np.ndarray]:
        if snapshot_id not in self._blobs:
            raise KeyError(f"unknown snapshot '{snapshot_id}'")
        return load_arrays_bytes(self._blobs[snapshot_id])

    def ids(self) -> set[str]:
        return set(self._blobs)

    def prune(self, keep: set[str]) -> None:
        for snapshot_id in list(self._blobs):
            if snapshot_id not in keep:
                del self._blobs[snapshot_id]


class DiskStore:
    """One checkpoint file per snapshot under ``directory``."""

    SUFFIX = ".ckpt"

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, snapshot_id: str) -> Path:
        return self.directory / f"{snapshot_id}{self.SUFFIX}"

    def save(self, arrays: dict[str, np.ndarray]) -> str:
        blob = save_arrays_bytes(arrays)
        snapshot_id = content_id(arrays)
        path = self._path(snapshot_id)
        if not path.exists():
            tmp = path.with_suffix(f".tmp.{os.getpid()}")
            tmp.write_bytes(blob)
            os.replace(tmp, path)
        return snapshot_id

    def load(self, snapshot_id: str) -> dict[str, np.ndarray]:
        path = self._path(snapshot_id)
        if not path.exists():
            raise KeyError(f"unknown snapshot '{snapshot_id}'")
        return load_arrays_bytes(path.read_bytes())

    def ids(self) -> set[str]:
        return {p.name[: -len(self.SUFFIX)] for p in self.directory.glob(f"*{self.SUFFIX}")}

    def prune(self, keep: set[str]) -> None:
        for snapshot_id in self.ids():
            if snapshot_id not in keep:
                self._path(snapshot_id).unlink(missing_ok=True)
