"""
Named random streams derived from one master seed.

Each component asks for its own stream, e.g. ``substream(seed, "dataset", 4)``
or ``substream(seed, "dropout", epoch)``, so components stay reproducible
independently of each other and of scheduling order.
"""

import zlib
from typing import Union

import numpy as np

Key = Union[str, int]


def _key_to_int(key: Key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"Stream keys must be non-negative, got {key}")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def seed_sequence(master_seed: int, *keys: Key) -> np.random.SeedSequence:
    """Build the SeedSequence for a named stream."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(_key_to_int(k) for k in keys))


def substream(master_seed: int, *keys: Key) -> np.random.Generator:
    """Return an independent generator for the stream identified by ``keys``."""
    return np.random.default_rng(seed_sequence(master_seed, *keys))


def derive_seed(master_seed: int, *keys: Key) -> int:
    """Return a 32-bit integer seed for the stream, for storage in manifests."""
    return int(seed_sequence(master_seed, *keys).generate_state(1, dtype=np.uint32)[0])
