"""Deterministic, splittable random streams keyed by (master seed, stream index)."""
from __future__ import annotations

import numpy as np


def stream(seed: int, index=0) -> np.random.Generator:
    """Independent generator for ``(seed, index)``; ``index`` may be an int or a tuple of ints."""
    key = tuple(index) if isinstance(index, (tuple, list)) else (int(index),)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
