"""Seeding helpers: every stochastic routine takes an int seed or a SeedSequence."""

from __future__ import annotations

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        raise TypeError("pass an int seed or a SeedSequence, not a Generator")
    return np.random.SeedSequence(int(seed))


def generator(seed) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed))


def child_seeds(seed, n: int) -> list:
    """``n`` independent child sequences; child ``i`` depends only on ``(seed, i)``."""
    ss = seed_sequence(seed)
    return [np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,)) for i in range(n)]


def child_generators(seed, n: int) -> list:
    return [np.random.default_rng(s) for s in child_seeds(seed, n)]
