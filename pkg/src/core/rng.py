"""
Seeded, splittable random streams.

Every random draw in jcas-lab comes from a ``SeededRng`` value: a 64-bit seed
plus a 64-bit stream id. The value itself is immutable; ``generator()`` builds
a fresh ``numpy.random.Generator`` on the counter-based Philox bit generator,
so two generators made from equal values produce bit-identical draws.

Streams are split, never shared. Monte-Carlo shards, training steps and
sweep points each derive their own child stream from the keys that identify
them (experiment id, phase, step, sample index, ...).
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeededRng:
    """
    Immutable (seed, stream) pair identifying one random stream.

    Attributes:
        seed: 64-bit experiment seed
        stream: 64-bit stream id (0 for the root stream)
    """
    seed: int
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(sequence))

    def child(self, *keys: int) -> "SeededRng":
        """
        Derive an independent stream identified by ``keys``.

        The child stream id is hashed from (seed, stream, keys) by
        ``SeedSequence``, so ``rng.child(3, 7)`` is the same stream on every
        platform and every run.
        """
        words = tuple(int(k) & _MASK64 for k in keys)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream,) + words)
        stream = int(sequence.generate_state(1, dtype=np.uint64)[0])
        return SeededRng(self.seed, stream)


RngLike = Union[SeededRng, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Accept either a ``SeededRng`` value or an already running generator."""
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"Expected SeededRng or numpy Generator, got {type(rng).__name__}")


__all__ = ["SeededRng", "RngLike", "as_generator"]
