"""Deterministic random stream derivation.

Every stochastic routine in this package draws from a ``numpy.random.Generator``
handed in by the caller.  The harness derives one independent generator per
experimental cell from ``(base_seed, *path)`` so that runs are reproducible
bit-for-bit and cells could be dispatched to parallel workers without sharing
generator state.

Mixing function: path components are folded to unsigned 64-bit integers
(string labels via the first 8 bytes of their SHA-256 digest) and the whole
tuple is fed to ``numpy.random.SeedSequence``, whose hashing guarantees that
distinct paths yield statistically independent streams.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = (1 << 64) - 1


def _fold(component: int | str) -> int:
    if isinstance(component, str):
        digest = hashlib.sha256(component.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")
    value = int(component)
    if value < 0:
        raise ValueError(f"stream path components must be non-negative, got {value}")
    return value & _U64


def substream(base_seed: int, *path: int | str) -> np.random.Generator:
    """Return the generator for ``(base_seed, *path)``.

    The same arguments always produce the same stream; any change to the seed
    or to any path component produces an independent one.
    """
    if base_seed < 0:
        raise ValueError(f"base_seed must be non-negative, got {base_seed}")
    entropy = [int(base_seed) & _U64] + [_fold(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
