"""Reproducible seed derivation for parallel-safe experiment streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def channel_key(channel_id: str) -> tuple[int, int]:
    """Stable 64-bit digest of a channel id, split into two 32-bit words."""
    digest = hashlib.sha256(channel_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big"), int.from_bytes(digest[4:8], "big")


@dataclass(frozen=True)
class SeedPath:
    """A point in a seed tree; sibling streams are order-independent.

    Two SeedPaths with the same (entropy, key) always yield the same
    generator, no matter which worker or in which order they are used.
    """

    entropy: int
    key: tuple[int, ...] = ()

    def child(self, *parts: int) -> "SeedPath":
        return SeedPath(self.entropy, self.key + parts)

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.entropy, spawn_key=self.key)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence()))


def as_seed_path(seed: "SeedPath | int") -> SeedPath:
    if isinstance(seed, SeedPath):
        return seed
    return SeedPath(int(seed))
