"""Deterministic random-stream splitting.

Every run derives all of its randomness from one 64-bit seed.  Parallel
workers (restarts, chains) get independent streams through spawn keys, so
results do not depend on scheduling order.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part) & 0xFFFFFFFF


def split_rng(seed: int, *key) -> np.random.Generator:
    """Generator for the stream identified by (seed, *key).

    The same (seed, key) always yields the same stream; distinct keys give
    statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=tuple(_key_part(p) for p in key))
    return np.random.Generator(np.random.PCG64(ss))
