"""Deterministic derivation of labelled RNG streams from a root seed.

Every consumer of randomness (topology generation, failure injection, poll
phases, rewiring, per-run sweep seeds) gets its own stream derived from a
root seed and a fixed label, so adding or removing draws in one consumer
never perturbs another.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(root: int, *labels: object) -> int:
    """Derive a 64-bit child seed from a root seed and label parts.

    Uses blake2b so the mapping is stable across processes and Python
    versions (built-in hash() is salted and unusable here).
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root) & MASK64).encode())
    for part in labels:
        h.update(b"|")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "big")


def stream(root: int, *labels: object) -> np.random.Generator:
    """A numpy Generator seeded from (root, labels)."""
    return np.random.default_rng(derive_seed(root, *labels))
