"""Counter-based stream derivation.

Every random stream is a ``numpy.random.Generator`` (PCG64) seeded from
``SeedSequence(master, spawn_key=labels)``.  Integer labels are used as is,
strings are mapped through CRC32, so ``rng(42, "sweep", 3, 7)`` always gives
the same stream regardless of which worker runs the task or in what order.
"""
from __future__ import annotations

import zlib

import numpy as np


def _label(v) -> int:
    if isinstance(v, str):
        return zlib.crc32(v.encode("utf-8"))
    v = int(v)
    if v < 0:
        raise ValueError("stream labels must be non-negative")
    return v


def seed_sequence(master: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=tuple(_label(v) for v in labels))


def rng(master: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(master, *labels)))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng(seed)
