"""Seeded random-stream derivation.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by ``(seed, stream_index)``. Distinct indices give
statistically independent streams, so sweep points and repeated runs can
share one user-facing seed without coupling their draws.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the independent generator for ``(seed, index)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))
