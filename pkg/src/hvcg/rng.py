"""Labeled, reproducible random substreams on top of a counter-based generator.

Every consumer of randomness receives its own stream derived from
(master_seed, label, *indices).  Streams are independent of each other and of
the order in which they are created, so results do not depend on worker count
or scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MAX_SEED = 2**64 - 1


def _label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(master_seed: int, label: str, *indices: int) -> np.random.Generator:
    """Return the generator for stream (master_seed, label, *indices).

    The same arguments always yield a generator producing the same draws;
    distinct labels or indices yield statistically independent streams.
    """
    if not 0 <= master_seed <= _MAX_SEED:
        raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    for ix in indices:
        if ix < 0:
            raise ValueError(f"stream indices must be nonnegative, got {ix}")
    entropy = [master_seed, _label_key(label), *indices]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
