"""Named deterministic RNG substreams.

All randomness in the package flows from a single user seed; independent
consumers derive their own generator from (seed, name, indices...) so that
adding or reordering one consumer never perturbs another.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *path: str | int) -> np.random.Generator:
    """Generator for the substream identified by (seed, *path).

    String path elements are hashed with crc32 so the mapping is stable
    across runs and platforms; integer elements (e.g. sample indices) are
    used directly.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    keys = [zlib.crc32(p.encode()) if isinstance(p, str) else int(p) for p in path]
    return np.random.default_rng([int(seed), *keys])
