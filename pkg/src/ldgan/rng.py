"""Deterministic random streams.

All randomness in the package flows from 64-bit PCG64 bit generators
(numpy's permuted congruential generator, platform independent) seeded
through ``numpy.random.SeedSequence``. A run seed is split into named
child streams by spawning the root sequence in a fixed documented
order, so adding draws to one stream never perturbs another:

    index 0  "data"       dataset sampling noise
    index 1  "generator"  generator weight init
    index 2  "extractor"  extractor / critic weight init
    index 3  "training"   minibatch indices and z draws, program order

Gaussian variates are produced by an explicit Box-Muller transform of
the uniform stream (two uniforms per pair of normals) rather than the
bit generator's native normal method, so normal draws are a documented
deterministic function of the uniform sequence.
"""

from __future__ import annotations

import numpy as np

STREAM_NAMES = ("data", "generator", "extractor", "training")


class Rng:
    """One deterministic stream: uniforms, Box-Muller normals, integers."""

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))

    def uniform(self, size=None) -> np.ndarray:
        """Uniforms in [0, 1)."""
        return self._gen.random(size=size)

    def normal(self, size=None, scale: float = 1.0) -> np.ndarray:
        """Standard normals via Box-Muller over the uniform stream."""
        shape = () if size is None else tuple(np.atleast_1d(size))
        count = int(np.prod(shape)) if shape else 1
        pairs = (count + 1) // 2
        # 1 - U keeps the log argument in (0, 1]
        u1 = 1.0 - self._gen.random(pairs)
        u2 = self._gen.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        draws = np.empty(2 * pairs)
        draws[0::2] = radius * np.cos(angle)
        draws[1::2] = radius * np.sin(angle)
        out = scale * draws[:count]
        if size is None:
            return float(out[0])
        return out.reshape(shape)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        """Integers in [low, high), from the same bit stream."""
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def split_streams(seed: int) -> dict:
    """Named child streams of a run seed, in the fixed documented order."""
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAM_NAMES))
    return {name: Rng(seq) for name, seq in zip(STREAM_NAMES, children)}


def make_rng(seed: int) -> Rng:
    """A single stream straight from the seed (datasets carry their own)."""
    return Rng(np.random.SeedSequence(int(seed)))
