"""Named random streams derived from one top-level seed."""

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for stage ``name``; same (seed, name), same stream."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed {seed} is not a 64-bit unsigned integer")
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, zlib.crc32(name.encode())]))
