"""Deterministic randomness splitting.

Every stochastic operation in the package derives its generator from a user
seed plus a fixed integer label path, via numpy's SeedSequence:

    Generator(PCG64(SeedSequence((seed, label_0, label_1, ...))))

Substreams with distinct label paths are statistically independent, and a
result never depends on evaluation order or worker scheduling: the same
(seed, labels) always reproduces the same stream.  Gaussian variates come
from numpy's Generator.normal (ziggurat), which is stable across platforms
for a fixed numpy major version.
"""

from __future__ import annotations

import numpy as np

# Fixed substream labels.  Changing any value changes every sampled instance.
FEATURES = 1
PERMUTATION = 2
OBSERVE_FIRST = 3
OBSERVE_SECOND = 4
NOISE = 5
SUBSAMPLE = 6
TRIAL = 7
PAIR_SAMPLE = 8

_MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not (0 <= seed <= _MAX_SEED):
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    return int(seed)


def substream(seed: int, *labels: int) -> np.random.Generator:
    """Generator for the substream identified by (seed, *labels)."""
    entropy = (check_seed(seed),) + tuple(int(x) for x in labels)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *labels: int) -> int:
    """A fresh 64-bit seed for the substream identified by (seed, *labels).

    Used when a derived operation itself takes a seed (e.g. per-trial seeds
    in a sweep, or the two observation passes of a correlated pair).
    """
    entropy = (check_seed(seed),) + tuple(int(x) for x in labels)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
