"""Deterministic stream derivation.

One master seed; every trial and every fixed-size block of rounds gets its own
stream keyed by its position, so results do not depend on how work is split
across workers.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for position ``key`` under master ``seed``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))))
