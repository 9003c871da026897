"""Counter-based random substreams.

Every stochastic draw in the package comes from a generator keyed by
``(master_seed, domain, *counters)``, so results do not depend on the order in
which samples are produced or on how work is split between threads.
"""

from __future__ import annotations

import numpy as np

# seed domains keep training, validation and experiment streams disjoint
TRAIN = 0
VALIDATION = 1
SPLIT = 2
FOLDS = 3


def substream(master_seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """``count`` reproducible 32-bit seeds for repeated runs."""
    state = np.random.SeedSequence(int(master_seed)).generate_state(count, dtype=np.uint32)
    return [int(s) for s in state]
