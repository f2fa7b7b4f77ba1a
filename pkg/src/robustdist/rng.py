"""Seed derivation.

Every random stream in the library is addressed by a path of tags under a
64-bit master seed, e.g. ``derive_rng(seed, "trial", 17, "sample")``. Tags are
hashed with blake2b so the mapping is stable across processes and Python
versions (unlike ``hash()``).
"""

from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

Tag = Union[str, int, float]

_MASK64 = (1 << 64) - 1


def _tag_word(tag: Tag) -> int:
    if isinstance(tag, bool):
        tag = int(tag)
    if isinstance(tag, int) and 0 <= tag <= 0xFFFFFFFF:
        return tag
    data = repr(tag).encode()
    return int.from_bytes(hashlib.blake2b(data, digest_size=4).digest(), "little")


def derive_seed(master_seed: int, *path: Tag) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        entropy=int(master_seed) & _MASK64,
        spawn_key=tuple(_tag_word(t) for t in path),
    )


def derive_rng(master_seed: int, *path: Tag) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *path))


def derive_int(master_seed: int, *path: Tag) -> int:
    """A 64-bit integer seed for APIs that take a plain ``seed``."""
    return int(derive_seed(master_seed, *path).generate_state(1, dtype=np.uint64)[0])


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x
