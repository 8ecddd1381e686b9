"""Named, independent random streams derived from one master seed.

Each stream is a Philox generator keyed by ``SeedSequence(seed, spawn_key=(tag,))``
where ``tag`` is a stable hash of the stream name, so adding a new stream
never shifts the draws of an existing one.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def _tag(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "little")


def stream(seed: int, name: str) -> np.random.Generator:
    """Return the generator for stream ``name`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(_tag(name),))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *labels: str | int) -> int:
    """Derive a 64-bit child seed from ``seed`` and a path of labels."""
    key = tuple(_tag(x) if isinstance(x, str) else int(x) for x in labels)
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])
