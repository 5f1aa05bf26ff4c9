"""Deterministic, named RNG streams.

Every stochastic routine in the package draws from a Generator created
here. A stream is identified by (seed, stream); distinct stream ids give
statistically independent generators for the same seed, which is how
sweeps and replica ensembles get per-item noise without sharing state.
"""

from __future__ import annotations

import numpy as np


def make_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the generator for stream `stream` of root seed `seed`.

    Built on SeedSequence spawn keys, so (seed, 0), (seed, 1), ... are
    independent and any (seed, stream) pair always yields the same
    sequence of draws.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.default_rng(ss)
