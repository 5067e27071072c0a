"""Seed derivation for reproducible, schedule-independent random streams."""

from __future__ import annotations

import hashlib

import numpy as np


def _key_words(key) -> list[int]:
    digest = hashlib.sha256(repr(key).encode()).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def derive_seed_sequence(master_seed: int, *key) -> np.random.SeedSequence:
    """SeedSequence for stream ``key`` under ``master_seed``.

    ``key`` is any tuple of plain values (model name, size, grid index,
    block index, ...).  The same (master_seed, key) always gives the same
    stream no matter which worker or in which order it is requested.
    """
    return np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1), spawn_key=tuple(_key_words(key)))


def make_rng(master_seed: int, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(master_seed, *key)))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def child_seed(master_seed: int, *key) -> int:
    """64-bit integer seed for sub-runs that take a plain seed."""
    return int(derive_seed_sequence(master_seed, *key).generate_state(1, np.uint64)[0])
