"""Deterministic RNG substream derivation.

Every stochastic step (interval sampling, decomposition starts, bootstrap
draws, simulation segments) derives its own generator from the master seed
plus a fixed integer key.  Results therefore never depend on evaluation
order or on how work is scheduled across threads.
"""

import numpy as np

# Domain tags for substream keys.  Never renumber: reports are reproducible
# only while the key layout is stable.
INTERVALS = 1
DECOMP = 2
BOOTSTRAP = 3
SERIES_TUNE = 4
DGP = 5


def _seedseq(seed, *key):
    parts = [int(seed)] + [int(x) for x in key]
    if any(x < 0 for x in parts):
        raise ValueError("seed key parts must be non-negative")
    return np.random.SeedSequence(parts)


def substream(seed, *key):
    """Independent generator for the given master seed and integer key."""
    return np.random.default_rng(_seedseq(seed, *key))


def derive_seed(seed, *key):
    """Derive a child integer seed, for nested runs that take a seed."""
    return int(_seedseq(seed, *key).generate_state(1, np.uint64)[0] >> 1)
