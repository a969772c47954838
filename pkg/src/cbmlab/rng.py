"""Deterministic random-number plumbing.

All randomness in the package flows from a single 64-bit root seed.  Streams
for replicas (and for independent sub-experiments within one run) are derived
with the documented splitting rule

    generator(root, *path) == Generator(Philox(SeedSequence(root, spawn_key=path)))

so that replica ``k`` of experiment ``j`` always sees the same stream no
matter how many replicas run, in what order, or on how many workers.  Philox
is counter-based: draws are a pure function of (key, counter), which makes
the streams platform-stable and cheap to fan out.
"""

from __future__ import annotations

import numpy as np

__all__ = ["spawn_generator", "spawn_seed_sequence"]


def spawn_seed_sequence(root_seed: int, *path: int) -> np.random.SeedSequence:
    """SeedSequence for stream ``path`` under ``root_seed``."""
    if not 0 <= int(root_seed) < 2**64:
        raise ValueError(f"root seed must be a 64-bit unsigned integer, got {root_seed}")
    return np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(p) for p in path))


def spawn_generator(root_seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for stream ``path`` under ``root_seed``.

    Identical (root_seed, path) always yields an identical stream; distinct
    paths yield statistically independent streams.
    """
    return np.random.Generator(np.random.Philox(spawn_seed_sequence(root_seed, *path)))
