"""Seeding conventions.

Every random draw in the package goes through a Philox counter-based
generator (64-bit keys) seeded from a :class:`numpy.random.SeedSequence`.
Gaussian variates use numpy's ziggurat sampler, fixed project-wide.

Stream splitting is explicit: a seed ``s`` and a tuple of integers ``key``
map to ``SeedSequence(s, spawn_key=key)``. Derived streams never depend on
how many other streams were created before them, so replicate ``r`` of
scenario ``c`` draws the same numbers whether it runs first, last, or on
another worker.
"""

import numpy as np

# spawn-key slots used inside a single sample
STREAM_GAUSSIAN = 0
STREAM_ELLIPTICITY = 1


def generator(seed, *key):
    """Philox generator for ``seed`` on the sub-stream ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(base_seed, *key):
    """Deterministic 64-bit child seed of ``base_seed`` for ``key``.

    The harness uses ``derive_seed(base_seed, scenario_id, replicate_index)``
    as the per-replicate seed.
    """
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
