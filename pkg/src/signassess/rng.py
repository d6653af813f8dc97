"""Deterministic seed splitting.

Parallel workers need independent streams that do not depend on scheduling
order. A sub-seed is the run seed XOR'd with a hash of the part labels
(e.g. sentence and signer ids). The hash must be stable across processes,
so it is built from SHA-256 rather than Python's salted ``hash()``.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 63) - 1


def subseed(seed: int, *parts) -> int:
    """Derive an independent 63-bit seed for the stream named by ``parts``."""
    label = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return (int(seed) ^ int.from_bytes(digest[:8], "big")) & _MASK


def substream(seed: int, *parts) -> np.random.Generator:
    """Generator seeded by :func:`subseed` of the given labels."""
    return np.random.default_rng(subseed(seed, *parts))
