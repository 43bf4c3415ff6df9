"""Small shared helpers: seeded generators and array hygiene."""

import numpy as np


def derive_rng(seed, *key):
    """Return a Generator seeded deterministically from ``seed`` and ``key``.

    The same (seed, key) pair always yields the same stream, and distinct
    keys yield statistically independent streams.  Used to give every trial
    of a sweep its own reproducible generator.
    """
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.default_rng([int(seed), *[int(k) for k in key]])


def frozen_array(values, dtype=float):
    """Copy ``values`` into a read-only float array."""
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr
