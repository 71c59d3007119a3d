"""Deterministic substream derivation for reproducible parallel sampling.

Every random draw in the package flows through a stream addressed by a
root seed plus a tuple of integer coordinates (trial index, user index,
purpose tag, ...).  A worker arriving at the same coordinates always gets
the same stream, so scheduling and worker counts cannot change results.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator addressed by ``(seed, *path)``."""
    entropy = (int(seed),) + tuple(int(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(entropy=entropy))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse ``(seed, *path)`` into a single integer seed.

    Used where an API takes a scalar seed (e.g. the MVN engine) but the
    caller needs independent, reproducible engines per grid point.
    """
    entropy = (int(seed),) + tuple(int(p) for p in path)
    return int(np.random.SeedSequence(entropy=entropy).generate_state(1, np.uint64)[0])
