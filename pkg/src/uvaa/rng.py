"""Keyed random-number substreams.

Every stochastic component draws from its own generator derived as

    substream(master_seed, label, *indices)

where ``label`` is a short purpose tag (e.g. ``"task-train"``) and the
indices identify the consumer (generation, task slot, episode ...).  The
derivation is a pure function of its arguments, so results never depend on
scheduling or thread count, and any external tool can reproduce a stream
from the manifest's seed table.
"""

from __future__ import annotations

import hashlib

import numpy as np


def label_key(label: str) -> int:
    """Stable 64-bit key for a purpose label."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(master_seed: int, label: str, *indices: int) -> np.random.Generator:
    """Derive an independent generator for (master seed, label, indices)."""
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    if any(i < 0 for i in indices):
        raise ValueError("substream indices must be non-negative")
    seq = np.random.SeedSequence([master_seed, label_key(label), *indices])
    return np.random.default_rng(seq)


def draw_seed(rng: np.random.Generator) -> int:
    """Draw a fresh non-negative 63-bit seed from an existing stream."""
    return int(rng.integers(0, 2**63 - 1))
