"""Seedable, splittable random streams.

All randomness comes from numpy's PCG64 bit generator seeded through a
``SeedSequence``. Child streams are obtained with ``SeedSequence.spawn``,
so a run split into blocks produces the same draws however the blocks are
scheduled across workers.
"""

from __future__ import annotations

import numpy as np

# Draws per independently seeded block when a run is split across workers.
BLOCK_SIZE = 1000


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def split(seed: int, k: int) -> list[np.random.Generator]:
    """``k`` statistically independent child generators of ``seed``."""
    return [make_rng(s) for s in np.random.SeedSequence(seed).spawn(k)]


def block_sizes(m: int, block: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(m, block)
    return [block] * full + ([rest] if rest else [])
