"""Seedable, platform-pinned random streams.

Every stochastic routine in the package draws from a PCG64 stream keyed by
(seed, *stream_ids). Normal variates use the Box-Muller transform on raw
uniforms rather than the generator's default ziggurat sampler, so the byte
stream depends only on the PCG64 contract and stays reproducible across
library versions. Per-item derived streams make output independent of
generation order and worker count.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, *stream_ids: int) -> np.random.Generator:
    """Independent generator for the given seed and stream coordinates."""
    entropy = [int(seed) & _MASK64] + [int(s) & _MASK64 for s in stream_ids]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal variates via Box-Muller on uniform doubles."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(shape)) if shape else 1
    pairs = (count + 1) // 2
    # 1 - u lies in (0, 1], keeping the log argument strictly positive.
    u1 = 1.0 - rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count].reshape(shape)
