"""Seeded noise streams shared by every chain backend.

Each MH step consumes two standard normals (the proposal increments) and one
uniform on ``(0, 1]``.  Draws are taken from a numpy ``Generator`` in blocks of
fixed size, so the stream is a function of the seed alone and does not depend
on how a run is chunked.  The compiled kernel, the pure-Python kernel and the
step-by-step reference API all read from the same buffers.
"""
from __future__ import annotations

import numpy as np

BLOCK = 8192


def replica_seed_sequence(master_seed: int, replica: int, cell: int = 0) -> np.random.SeedSequence:
    """Independent stream for ``replica`` in grid cell ``cell`` of a run seeded with ``master_seed``.

    Uses the SeedSequence spawn-key mechanism with key ``(cell, replica)``:
    any stream can be rebuilt on its own, without generating the others, and
    the result does not depend on how replicas are spread over workers.
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(cell), int(replica)))


class NoiseStream:
    """Buffered source of ``(normal, normal, uniform)`` triples."""

    def __init__(self, seed=0):
        if isinstance(seed, np.random.SeedSequence):
            seq = seed
        else:
            seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(seq))
        self.normals = np.empty((0, 2))
        self.uniforms = np.empty(0)
        self.cursor = 0
        self.consumed = 0

    def _refill(self):
        self.normals = self._gen.standard_normal((BLOCK, 2))
        # (0, 1] keeps log(u) finite
        self.uniforms = 1.0 - self._gen.random(BLOCK)
        self.cursor = 0

    def available(self) -> int:
        """Number of buffered triples, refilling first if the buffer is empty."""
        if self.cursor >= len(self.uniforms):
            self._refill()
        return len(self.uniforms) - self.cursor

    def advance(self, n: int) -> None:
        self.cursor += n
        self.consumed += n

    def draw(self) -> tuple[float, float, float]:
        """Next triple, for step-by-step use."""
        self.available()
        c = self.cursor
        z1, z2 = self.normals[c]
        u = self.uniforms[c]
        self.advance(1)
        return float(z1), float(z2), float(u)
