"""Seed handling: every random routine takes an explicit seed."""
from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.integer, np.random.SeedSequence, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(int(seed))


def stream(base_seed: int, *keys: int) -> np.random.SeedSequence:
    """Independent seed stream addressed by ``(base_seed, *keys)``.

    The stream depends only on its address, never on the order in which
    streams are requested, so work-pool scheduling cannot change results.
    """
    return np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in keys))


def block_streams(seed: SeedLike, n_blocks: int) -> list[np.random.SeedSequence]:
    if isinstance(seed, np.random.Generator):
        ss = np.random.SeedSequence(int(seed.integers(2**63)))
    elif isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(int(seed))
    return [
        np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,))
        for i in range(n_blocks)
    ]
